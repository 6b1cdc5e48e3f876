//! Built-in example problems, keyed by short names, with default solver
//! guesses that are known to converge.

use std::collections::BTreeMap;
use std::sync::Arc;

use once_cell::sync::Lazy;

use crate::error::{Result, SolverError};
use crate::problem::{
    BoundaryCase, BoundarySpec, IntegrandDef, OCProblem, TerminalCost, UncertaintyChannel,
    UncertaintySet, VariationalProblem,
};

/// A registry entry holds either kind of problem.
#[derive(Debug, Clone)]
pub enum AnyProblem {
    Variational(VariationalProblem),
    OptimalControl(OCProblem),
}

impl AnyProblem {
    pub fn name(&self) -> &str {
        match self {
            Self::Variational(p) => p.name(),
            Self::OptimalControl(p) => p.name(),
        }
    }

    pub fn param_dim(&self) -> usize {
        match self {
            Self::Variational(p) => p.param_dim(),
            Self::OptimalControl(p) => p.param_dim(),
        }
    }

    pub fn uncertainty(&self) -> &UncertaintySet {
        match self {
            Self::Variational(p) => p.uncertainty(),
            Self::OptimalControl(p) => p.uncertainty(),
        }
    }

    pub fn boundary(&self) -> &BoundarySpec {
        match self {
            Self::Variational(p) => p.boundary(),
            Self::OptimalControl(p) => p.boundary(),
        }
    }
}

/// Starting point handed to the solvers: initial slope or costate, parameter
/// value, and final time when the problem leaves it free.
#[derive(Debug, Clone)]
pub struct Guess {
    pub xdot0: Option<Vec<f64>>,
    pub p0: Option<Vec<f64>>,
    pub a: Vec<f64>,
    pub tf: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RegistryEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub problem: AnyProblem,
    pub guess: Guess,
}

fn quad_coupled_integrand() -> IntegrandDef {
    // g = x² + ẋ² − a² − 2ax
    IntegrandDef::new(|x: &[f64], v: &[f64], a: &[f64], _t| {
        x[0] * x[0] + v[0] * v[0] - a[0] * a[0] - 2.0 * a[0] * x[0]
    })
    .with_g_x(|x: &[f64], _v: &[f64], a: &[f64], _t| vec![2.0 * x[0] - 2.0 * a[0]])
    .with_g_xdot(|_x: &[f64], v: &[f64], _a: &[f64], _t| vec![2.0 * v[0]])
    .with_g_a(|x: &[f64], _v: &[f64], a: &[f64], _t| vec![-2.0 * a[0] - 2.0 * x[0]])
    .with_g_xx(|_x: &[f64], _v: &[f64], _a: &[f64], _t| vec![2.0])
    .with_g_xdot_xdot(|_x: &[f64], _v: &[f64], _a: &[f64], _t| vec![2.0])
    .with_g_aa(|_x: &[f64], _v: &[f64], _a: &[f64], _t| vec![-2.0])
}

/// Shared polynomial family behind ex3/ex4; `q` is the coefficient of the
/// a²t² term (4.5 for ex3, 18 for ex4).
fn poly_time_coupled_integrand(q: f64) -> IntegrandDef {
    IntegrandDef::new(move |x: &[f64], v: &[f64], a: &[f64], t| {
        6.0 * a[0] * x[0] + 0.5 * v[0] * v[0] + 4.0 - 24.0 * t - 6.0 * a[0] * a[0] * t
            + 12.0 * a[0] * t
            + 2.0 * a[0]
            + q * a[0] * a[0] * t * t
    })
    .with_g_x(|_x: &[f64], _v: &[f64], a: &[f64], _t| vec![6.0 * a[0]])
    .with_g_xdot(|_x: &[f64], v: &[f64], _a: &[f64], _t| vec![v[0]])
    .with_g_a(move |x: &[f64], _v: &[f64], a: &[f64], t| {
        vec![6.0 * x[0] - 12.0 * a[0] * t + 12.0 * t + 2.0 + 2.0 * q * a[0] * t * t]
    })
    .with_g_xx(|_x: &[f64], _v: &[f64], _a: &[f64], _t| vec![0.0])
    .with_g_xdot_xdot(|_x: &[f64], _v: &[f64], _a: &[f64], _t| vec![1.0])
    .with_g_aa(move |_x: &[f64], _v: &[f64], _a: &[f64], t| vec![-12.0 * t + 2.0 * q * t * t])
}

fn lq_shifted_problem(name: &'static str, concave_reward: bool) -> OCProblem {
    OCProblem::new(
        name,
        1,
        1,
        Arc::new(|_x: &[f64], u: &[f64], _a: &[f64], _t| vec![u[0]]),
        Arc::new(move |_x: &[f64], u: &[f64], a: &[f64], _t| {
            let base = 0.5 * u[0] * u[0];
            if concave_reward {
                base - a[0] * a[0]
            } else {
                base
            }
        }),
        TerminalCost::of_state_time(|x: &[f64], _t| 0.5 * x[0] * x[0])
            .with_x_grad(|x: &[f64], _t| x.to_vec())
            .with_t_partial(|_x: &[f64], _t| 0.0),
        BoundarySpec::new(0.0, vec![0.0], BoundaryCase::FixedTimeFreeState { tf: 1.0 }),
        UncertaintySet::Unbounded { dim: 1 },
        UncertaintyChannel::InitialState,
    )
    .expect("registry problems are well-formed")
}

static REGISTRY: Lazy<BTreeMap<&'static str, RegistryEntry>> = Lazy::new(|| {
    let mut map = BTreeMap::new();
    let mut add = |entry: RegistryEntry| {
        map.insert(entry.name, entry);
    };

    let ex1 = VariationalProblem::new(
        "ex1",
        1,
        quad_coupled_integrand(),
        BoundarySpec::new(
            0.0,
            vec![1.0],
            BoundaryCase::FixedTimeFixedState {
                tf: 1.0,
                xf: vec![1.0],
            },
        ),
        UncertaintySet::Unbounded { dim: 1 },
    )
    .expect("registry problems are well-formed");

    add(RegistryEntry {
        name: "ex1-neg",
        description: "ex1 with the integrand negated, flipping the saddle orientation",
        problem: AnyProblem::Variational(ex1.scaled(-1.0, "ex1-neg")),
        guess: Guess {
            xdot0: Some(vec![-0.5]),
            p0: None,
            a: vec![-0.5],
            tf: None,
        },
    });

    add(RegistryEntry {
        name: "ex1",
        description:
            "scalar quadratic integrand with a parameter-coupled linear term, both endpoints pinned",
        problem: AnyProblem::Variational(ex1),
        guess: Guess {
            xdot0: Some(vec![-0.5]),
            p0: None,
            a: vec![-0.5],
            tf: None,
        },
    });

    add(RegistryEntry {
        name: "ex2",
        description: "same integrand as ex1 with the final state left free",
        problem: AnyProblem::Variational(
            VariationalProblem::new(
                "ex2",
                1,
                quad_coupled_integrand(),
                BoundarySpec::new(0.0, vec![0.0], BoundaryCase::FixedTimeFreeState { tf: 1.0 }),
                UncertaintySet::Unbounded { dim: 1 },
            )
            .expect("registry problems are well-formed"),
        ),
        guess: Guess {
            xdot0: Some(vec![0.3]),
            p0: None,
            a: vec![0.4],
            tf: None,
        },
    });

    add(RegistryEntry {
        name: "ex3",
        description: "state-linear integrand with polynomial time coupling, free final time and pinned final state",
        problem: AnyProblem::Variational(
            VariationalProblem::new(
                "ex3",
                1,
                poly_time_coupled_integrand(4.5),
                BoundarySpec::new(0.0, vec![0.0], BoundaryCase::FreeTimeFixedState { xf: vec![0.0] }),
                UncertaintySet::Unbounded { dim: 1 },
            )
            .expect("registry problems are well-formed"),
        ),
        guess: Guess {
            xdot0: Some(vec![-1.5]),
            p0: None,
            a: vec![1.5],
            tf: Some(0.5),
        },
    });

    add(RegistryEntry {
        name: "ex4",
        description: "variant of ex3 with a stronger parameter-quadratic term, final time and state both free",
        problem: AnyProblem::Variational(
            VariationalProblem::new(
                "ex4",
                1,
                poly_time_coupled_integrand(18.0),
                BoundarySpec::new(0.0, vec![0.0], BoundaryCase::FreeTimeFreeState),
                UncertaintySet::Unbounded { dim: 1 },
            )
            .expect("registry problems are well-formed"),
        ),
        guess: Guess {
            xdot0: Some(vec![-3.5]),
            p0: None,
            a: vec![1.8],
            tf: Some(0.4),
        },
    });

    let ex5 = OCProblem::new(
        "ex5",
        2,
        1,
        Arc::new(|x: &[f64], u: &[f64], a: &[f64], _t| {
            vec![x[1] + a[0] * a[0] + 2.0 * a[0], -x[1] + u[0]]
        }),
        Arc::new(|_x: &[f64], u: &[f64], a: &[f64], _t| 0.5 * u[0] * u[0] - 10.0 * a[0].powi(4)),
        TerminalCost::of_state_time(|x: &[f64], _t| 0.5 * (x[0] * x[0] + x[1] * x[1]))
            .with_x_grad(|x: &[f64], _t| x.to_vec())
            .with_t_partial(|_x: &[f64], _t| 0.0),
        BoundarySpec::new(
            0.0,
            vec![1.0, 1.0],
            BoundaryCase::FixedTimeFreeState { tf: 2.0 },
        ),
        UncertaintySet::Unbounded { dim: 1 },
        UncertaintyChannel::Dynamics,
    )
    .expect("registry problems are well-formed");

    add(RegistryEntry {
        name: "ex5-bounded",
        description: "ex5 with the parameter confined to a symmetric box",
        problem: AnyProblem::OptimalControl(
            ex5.with_uncertainty(
                UncertaintySet::Box {
                    lower: vec![-0.5],
                    upper: vec![0.5],
                },
                "ex5-bounded",
            )
            .expect("registry problems are well-formed"),
        ),
        guess: Guess {
            xdot0: None,
            p0: Some(vec![3.0, 2.5]),
            a: vec![0.4],
            tf: None,
        },
    });

    add(RegistryEntry {
        name: "ex5",
        description: "two-state control problem with parameter-driven drift, a quartic parameter reward, and a quadratic terminal cost",
        problem: AnyProblem::OptimalControl(ex5),
        guess: Guess {
            xdot0: None,
            p0: Some(vec![3.0, 2.5]),
            a: vec![0.5],
            tf: None,
        },
    });

    add(RegistryEntry {
        name: "lq1",
        description: "scalar linear-quadratic problem whose parameter shifts the initial state",
        problem: AnyProblem::OptimalControl(lq_shifted_problem("lq1", false)),
        guess: Guess {
            xdot0: None,
            p0: Some(vec![0.1]),
            a: vec![0.3],
            tf: None,
        },
    });

    add(RegistryEntry {
        name: "lq2",
        description: "lq1 with an added concave parameter reward in the running cost",
        problem: AnyProblem::OptimalControl(lq_shifted_problem("lq2", true)),
        guess: Guess {
            xdot0: None,
            p0: Some(vec![0.1]),
            a: vec![0.3],
            tf: None,
        },
    });

    map
});

/// All built-in problems, keyed by name.
pub fn registry() -> &'static BTreeMap<&'static str, RegistryEntry> {
    &REGISTRY
}

/// Look up a built-in problem by name.
pub fn lookup(name: &str) -> Result<&'static RegistryEntry> {
    registry().get(name).ok_or_else(|| {
        let known: Vec<&str> = registry().keys().copied().collect();
        SolverError::InvalidProblem(format!(
            "unknown problem {name:?}; known problems: {}",
            known.join(", ")
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_expected_keys() {
        let keys: Vec<&str> = registry().keys().copied().collect();
        assert_eq!(
            keys,
            vec![
                "ex1",
                "ex1-neg",
                "ex2",
                "ex3",
                "ex4",
                "ex5",
                "ex5-bounded",
                "lq1",
                "lq2"
            ]
        );
    }

    #[test]
    fn guesses_are_dimensionally_consistent() {
        for entry in registry().values() {
            assert_eq!(
                entry.guess.a.len(),
                entry.problem.param_dim(),
                "{}: parameter guess length",
                entry.name
            );
            match &entry.problem {
                AnyProblem::Variational(p) => {
                    let xdot0 = entry
                        .guess
                        .xdot0
                        .as_ref()
                        .expect("variational guess has a slope");
                    assert_eq!(xdot0.len(), p.state_dim(), "{}", entry.name);
                    assert!(entry.guess.p0.is_none(), "{}", entry.name);
                    assert_eq!(
                        entry.guess.tf.is_some(),
                        p.boundary().case.is_free_time(),
                        "{}: tf guess presence",
                        entry.name
                    );
                }
                AnyProblem::OptimalControl(p) => {
                    let p0 = entry
                        .guess
                        .p0
                        .as_ref()
                        .expect("control guess has a costate");
                    assert_eq!(p0.len(), p.state_dim(), "{}", entry.name);
                    assert!(entry.guess.xdot0.is_none(), "{}", entry.name);
                }
            }
            assert_eq!(entry.problem.name(), entry.name);
        }
    }

    #[test]
    fn ex1_integrand_matches_hand_value() {
        let entry = lookup("ex1").unwrap();
        let AnyProblem::Variational(p) = &entry.problem else {
            panic!("ex1 is variational");
        };
        // g(1, 2, 3, t) = 1 + 4 − 9 − 6 = −10
        assert_eq!(p.integrand().eval(&[1.0], &[2.0], &[3.0], 0.7), -10.0);
    }

    #[test]
    fn ex1_neg_is_exact_negation() {
        let AnyProblem::Variational(p) = &lookup("ex1").unwrap().problem else {
            panic!()
        };
        let AnyProblem::Variational(n) = &lookup("ex1-neg").unwrap().problem else {
            panic!()
        };
        let (x, v, a, t) = (&[0.4][..], &[-1.3][..], &[0.9][..], 0.25);
        assert_eq!(
            n.integrand().eval(x, v, a, t),
            -p.integrand().eval(x, v, a, t)
        );
    }

    #[test]
    fn ex5_dynamics_match_hand_value() {
        let AnyProblem::OptimalControl(p) = &lookup("ex5").unwrap().problem else {
            panic!()
        };
        // f([1, 1], u=2, a=1, t) = [1 + 1 + 2, -1 + 2] = [4, 1]
        let f = (p.dynamics())(&[1.0, 1.0], &[2.0], &[1.0], 0.0);
        assert_eq!(f, vec![4.0, 1.0]);
        assert_eq!(p.channel(), UncertaintyChannel::Dynamics);
        // Running cost at u=2, a=1: 0.5·4 − 10 = −8
        assert_eq!((p.running_cost())(&[0.0, 0.0], &[2.0], &[1.0], 0.0), -8.0);
    }

    #[test]
    fn ex5_bounded_shares_the_model() {
        let AnyProblem::OptimalControl(p) = &lookup("ex5").unwrap().problem else {
            panic!()
        };
        let AnyProblem::OptimalControl(b) = &lookup("ex5-bounded").unwrap().problem else {
            panic!()
        };
        let args = (&[0.3, -0.2][..], &[1.1][..], &[0.2][..], 1.5);
        assert_eq!(
            (p.dynamics())(args.0, args.1, args.2, args.3),
            (b.dynamics())(args.0, args.1, args.2, args.3)
        );
        assert!(matches!(b.uncertainty(), UncertaintySet::Box { .. }));
    }

    #[test]
    fn lq_entries_use_the_initial_state_channel() {
        for name in ["lq1", "lq2"] {
            let AnyProblem::OptimalControl(p) = &lookup(name).unwrap().problem else {
                panic!()
            };
            assert_eq!(p.channel(), UncertaintyChannel::InitialState);
        }
        // lq2 − lq1 running-cost difference is exactly −a².
        let AnyProblem::OptimalControl(l1) = &lookup("lq1").unwrap().problem else {
            panic!()
        };
        let AnyProblem::OptimalControl(l2) = &lookup("lq2").unwrap().problem else {
            panic!()
        };
        let d = (l2.running_cost())(&[0.5], &[1.0], &[0.7], 0.3)
            - (l1.running_cost())(&[0.5], &[1.0], &[0.7], 0.3);
        assert!((d + 0.49).abs() < 1e-15);
    }

    #[test]
    fn lookup_rejects_unknown_names() {
        let err = lookup("does-not-exist").unwrap_err();
        assert!(matches!(err, SolverError::InvalidProblem(_)));
    }
}
