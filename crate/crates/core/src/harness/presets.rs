//! Named experiments. Every acceptance study is reproducible from one of these.

use super::config::{Datum, ExperimentConfig, ForcingSpec, Ladder, ProblemKind, ProfileKind};
use super::fit::Criterion;
use crate::error::{Error, Result};
use crate::semigroup::NonlinearSpec;

const LADDER: Ladder = Ladder { start: 10.0, end: 1000.0, per_decade: 4 };

fn base(id: &str, problem: ProblemKind, theta: f64, k: f64, profile: ProfileKind, criterion: Criterion) -> ExperimentConfig {
    ExperimentConfig {
        id: id.to_string(),
        problem,
        theta,
        dim: 1,
        k,
        q: 1.0,
        ell: 0.0,
        datum: Datum::gaussian(),
        forcing: ForcingSpec::None,
        nonlinear: None,
        solver: None,
        ladder: LADDER,
        profile,
        criterion,
        predicted_exponent: None,
    }
}

fn asymmetric() -> Datum {
    Datum::Asymmetric { left: 1.0, right: 2.0, separation: 2.0 }
}

fn decaying() -> ForcingSpec {
    ForcingSpec::GaussianDecay { amplitude: 1.0, rate: 1.0, width: 1.0 }
}

fn single(name: &str) -> Option<ExperimentConfig> {
    let c = match name {
        "linear-full" => ExperimentConfig {
            datum: asymmetric(),
            ..base(name, ProblemKind::Linear, 1.0, 1.0, ProfileKind::Full, Criterion::SlopeAtMost { max: -1.5 })
        },
        "linear-truncated" => ExperimentConfig {
            datum: asymmetric(),
            ..base(
                name,
                ProblemKind::Linear,
                1.0,
                1.0,
                ProfileKind::Truncated { max_alpha: 0 },
                Criterion::SlopeNear { target: -1.0, tolerance: 0.15 },
            )
        },
        "linear-sup" => ExperimentConfig {
            datum: asymmetric(),
            q: f64::INFINITY,
            ..base(name, ProblemKind::Linear, 1.0, 1.0, ProfileKind::Full, Criterion::ScaledDecreasing { decades: 1.0 })
        },
        "forced-q1" | "forced-qinf" | "forced-qinf-ell1" => {
            let (q, ell) = match name {
                "forced-q1" => (1.0, 0.0),
                "forced-qinf" => (f64::INFINITY, 0.0),
                _ => (f64::INFINITY, 1.0),
            };
            ExperimentConfig {
                q,
                ell,
                forcing: decaying(),
                ..base(name, ProblemKind::Linear, 1.0, 1.0, ProfileKind::Full, Criterion::ScaledDecreasing { decades: 1.0 })
            }
        }
        "convection-full" => ExperimentConfig {
            forcing: decaying(),
            ..base(name, ProblemKind::Convection, 1.5, 2.0, ProfileKind::Full, Criterion::default())
        },
        "convection-stripped" => ExperimentConfig {
            forcing: decaying(),
            ..base(
                name,
                ProblemKind::Convection,
                1.5,
                2.0,
                ProfileKind::Stripped,
                Criterion::SlopeNear { target: -1.0 / 1.5, tolerance: 0.15 },
            )
        },
        "nonlinear-u0" => ExperimentConfig {
            nonlinear: Some(NonlinearSpec::new(-1.0, 3.0)),
            ..base(
                name,
                ProblemKind::Nonlinear,
                1.0,
                2.0,
                ProfileKind::Chain { n: 0 },
                Criterion::SlopeNear { target: -1.0, tolerance: 0.15 },
            )
        },
        "nonlinear-u1" => ExperimentConfig {
            nonlinear: Some(NonlinearSpec::new(-1.0, 3.0)),
            ..base(name, ProblemKind::Nonlinear, 1.0, 2.0, ProfileKind::Chain { n: 1 }, Criterion::SlopeAtMost { max: -1.5 })
        },
        "mass-profile" => ExperimentConfig {
            nonlinear: Some(NonlinearSpec::new(-1.0, 3.0)),
            ..base(name, ProblemKind::MassProfile, 1.0, 2.0, ProfileKind::Mass, Criterion::default())
        },
        _ => return None,
    };
    Some(c)
}

/// Batches: each maps to a list of single presets.
const BATCHES: &[(&str, &[&str])] = &[
    ("rate-linear", &["linear-full", "linear-truncated"]),
    ("rate-forced", &["forced-q1", "forced-qinf", "forced-qinf-ell1"]),
    ("rate-convection", &["convection-full", "convection-stripped"]),
    ("rate-nonlinear", &["nonlinear-u0", "nonlinear-u1"]),
    (
        "acceptance",
        &[
            "linear-full",
            "linear-truncated",
            "forced-q1",
            "forced-qinf",
            "forced-qinf-ell1",
            "convection-full",
            "convection-stripped",
            "nonlinear-u0",
            "nonlinear-u1",
        ],
    ),
];

const SINGLES: &[&str] = &[
    "linear-full",
    "linear-truncated",
    "linear-sup",
    "forced-q1",
    "forced-qinf",
    "forced-qinf-ell1",
    "convection-full",
    "convection-stripped",
    "nonlinear-u0",
    "nonlinear-u1",
    "mass-profile",
];

/// Every preset name, singles first.
pub fn preset_names() -> Vec<&'static str> {
    SINGLES.iter().copied().chain(BATCHES.iter().map(|b| b.0)).collect()
}

/// The experiments of a single or batch preset.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    if let Some(c) = single(name) {
        return Ok(vec![c]);
    }
    if let Some((_, members)) = BATCHES.iter().find(|b| b.0 == name) {
        return Ok(members.iter().map(|m| single(m).unwrap()).collect());
    }
    Err(Error::UnknownPreset(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in preset_names() {
            for c in preset(name).unwrap() {
                c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn predicted_exponents() {
        let p = |n: &str| preset(n).unwrap()[0].predicted().unwrap();
        assert_eq!(p("linear-full"), 1.0);
        assert_eq!(p("linear-truncated"), 1.0);
        assert_eq!(p("forced-qinf"), 2.0);
        assert_eq!(p("forced-qinf-ell1"), 1.0);
        assert_eq!(p("nonlinear-u0"), 1.0);
        assert_eq!(p("nonlinear-u1"), 2.0);
        assert!((p("mass-profile") - 1.9).abs() < 1e-12);
    }
}
