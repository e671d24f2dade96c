use rand::seq::IndexedRandom;
use rand::Rng;

use super::{render, vignette_id, ClinicalFields, NamePools, NameSwap, Variant, Vignette, AGE_REFERENCE};
use crate::cohort::{SampledRow, OBSTETRIC_KEYWORDS, SEX_LINKED_KEYWORDS};
use crate::error::{Error, Result};
use crate::text::{contains_any_word, gendered_tokens, has_keyword};

/// True when the complaint names a sex-specific organ or an obstetric
/// presentation, so swapping the patient's gender would be implausible.
pub fn is_sex_linked(complaint: &str) -> bool {
    SEX_LINKED_KEYWORDS
        .iter()
        .chain(OBSTETRIC_KEYWORDS)
        .any(|(kw, whole)| has_keyword(complaint, kw, *whole))
}

fn rerender(mut v: Vignette) -> Result<Vignette> {
    v.text = render(&v)?;
    Ok(v)
}

/// Builds the original vignette for a sampled visit. The name is drawn from
/// the pool matching the recorded gender and race.
pub fn original_from_row(
    sampled: &SampledRow,
    pair_id: &str,
    pools: &NamePools,
    rng: &mut impl Rng,
) -> Result<Vignette> {
    let row = &sampled.row;
    let pool = pools.pool(row.gender, row.race);
    let name = pool
        .choose(rng)
        .ok_or_else(|| Error::PoolExhausted(format!("{}/{}", row.gender, row.race)))?;
    rerender(Vignette {
        vignette_id: vignette_id(pair_id, Variant::Original),
        pair_id: pair_id.to_string(),
        variant: Variant::Original,
        name: Some((*name).to_string()),
        gender: Some(row.gender),
        age: Some(row.age),
        race: row.race,
        source_gender: row.gender,
        category: sampled.stratum.category,
        clinical: ClinicalFields::from(row),
        text: String::new(),
        ground_truth_esi: row.esi,
        disposition: row.disposition,
        duplicate: sampled.duplicate,
        name_swap: None,
    })
}

fn named(v: &Vignette) -> Result<(String, crate::domain::Gender)> {
    match (&v.name, v.gender) {
        (Some(n), Some(g)) => Ok((n.clone(), g)),
        _ => Err(Error::Contract(format!(
            "{} has no name or gender to swap",
            v.vignette_id
        ))),
    }
}

/// Flips gender, replaces the name with one from the opposite-gender pool of
/// the same race, and rewrites gendered words. Clinical fields are untouched.
pub fn make_counterfactual(v: &Vignette, pools: &NamePools, rng: &mut impl Rng) -> Result<Vignette> {
    if v.variant != Variant::Original {
        return Err(Error::Contract(format!(
            "counterfactual requires an original vignette, got {:?}",
            v.variant
        )));
    }
    if is_sex_linked(&v.clinical.chief_complaint) {
        return Err(Error::SexLinked(v.clinical.chief_complaint.clone()));
    }
    let (name, gender) = named(v)?;
    let target = gender.opposite();
    let new_name = pools
        .pool(target, v.race)
        .choose(rng)
        .map(|s| (*s).to_string())
        .ok_or_else(|| Error::PoolExhausted(format!("{target}/{}", v.race)))?;
    rerender(Vignette {
        vignette_id: vignette_id(&v.pair_id, Variant::Counterfactual),
        variant: Variant::Counterfactual,
        name: Some(new_name.clone()),
        gender: Some(target),
        name_swap: Some(NameSwap { from: name, to: new_name }),
        ..v.clone()
    })
}

/// Undoes [`make_counterfactual`] using the recorded name swap.
pub fn invert_counterfactual(cf: &Vignette) -> Result<Vignette> {
    let swap = match (&cf.variant, &cf.name_swap) {
        (Variant::Counterfactual, Some(s)) => s.clone(),
        _ => {
            return Err(Error::Contract(format!(
                "{} is not an invertible counterfactual",
                cf.vignette_id
            )))
        }
    };
    let (_, gender) = named(cf)?;
    rerender(Vignette {
        vignette_id: vignette_id(&cf.pair_id, Variant::Original),
        variant: Variant::Original,
        name: Some(swap.from),
        gender: Some(gender.opposite()),
        name_swap: None,
        ..cf.clone()
    })
}

/// Flips gender and pronouns but keeps the name. Applying it twice returns the
/// input unchanged; vignettes without a displayed gender pass through.
pub fn gender_only_swap(v: &Vignette) -> Result<Vignette> {
    let Some(gender) = v.gender else {
        return Ok(v.clone());
    };
    let variant = match v.variant {
        Variant::Original => Variant::GenderOnly,
        Variant::GenderOnly => Variant::Original,
        other => other,
    };
    let vignette_id = if variant == v.variant {
        v.vignette_id.clone()
    } else {
        vignette_id(&v.pair_id, variant)
    };
    rerender(Vignette {
        vignette_id,
        variant,
        gender: Some(gender.opposite()),
        ..v.clone()
    })
}

/// Replaces the name with a different one from the same gender and race pool.
pub fn name_only_swap(v: &Vignette, pools: &NamePools, rng: &mut impl Rng) -> Result<Vignette> {
    let (name, gender) = named(v)?;
    let pool = pools.pool(gender, v.race);
    if pool.len() < 2 {
        return Err(Error::PoolExhausted(format!("{gender}/{}", v.race)));
    }
    let others: Vec<&str> = pool.into_iter().filter(|n| *n != name).collect();
    let new_name = others
        .choose(rng)
        .map(|s| (*s).to_string())
        .ok_or_else(|| Error::PoolExhausted(format!("{gender}/{}", v.race)))?;
    rerender(Vignette {
        vignette_id: vignette_id(&v.pair_id, Variant::NameOnly),
        variant: Variant::NameOnly,
        name: Some(new_name.clone()),
        name_swap: Some(NameSwap { from: name, to: new_name }),
        ..v.clone()
    })
}

/// Removes name and gender but keeps the age in the header.
pub fn age_preserving_blind(v: &Vignette) -> Result<Vignette> {
    rerender(Vignette {
        vignette_id: vignette_id(&v.pair_id, Variant::AgePreservingBlind),
        variant: Variant::AgePreservingBlind,
        name: None,
        gender: None,
        name_swap: None,
        ..v.clone()
    })
}

/// Removes every demographic field. The vignette id is kept so results can be
/// joined back to the source vignette. Idempotent.
pub fn blind(v: &Vignette) -> Result<Vignette> {
    rerender(Vignette {
        variant: Variant::Blind,
        name: None,
        gender: None,
        age: None,
        name_swap: None,
        ..v.clone()
    })
}

/// Demographic tokens left in `text`: gendered words, pool names and age
/// references. Empty for a correctly blinded vignette.
pub fn demographic_tokens(text: &str, pools: &NamePools) -> Vec<String> {
    let mut found = gendered_tokens(text);
    let names = pools.all_names();
    let mut rest: Vec<&str> = names.iter().copied().collect();
    while let Some(hit) = contains_any_word(text, rest.iter().copied()) {
        found.push(hit.to_string());
        rest.retain(|n| *n != hit);
    }
    found.extend(AGE_REFERENCE.find_iter(text).map(|m| m.as_str().to_string()));
    if text.contains("year-old") && !found.iter().any(|t| t.contains("year-old")) {
        found.push("year-old".into());
    }
    found
}
