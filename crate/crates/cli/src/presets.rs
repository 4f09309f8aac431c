use clap::ValueEnum;

use crate::config::{ConfigLayer, Horizon, ModelKind, PartialCouplings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }

    pub fn layer(self) -> ConfigLayer {
        let (n, initial, model, couplings) = match self {
            Figure::Fig1 => (3, "RRY", ModelKind::Hamming, PartialCouplings { beta: Some(0.5), ..Default::default() }),
            Figure::Fig2 => (
                3,
                "RRY",
                ModelKind::Crystal,
                PartialCouplings { eps: Some(0.1), gamma: Some(0.3), delta: Some(0.3), ..Default::default() },
            ),
            Figure::Fig3 => (4, "YYRY", ModelKind::Crystal, equal_half()),
            Figure::Fig4 => (6, "RYRYRY", ModelKind::Crystal, equal_half()),
        };
        ConfigLayer {
            n: Some(n),
            initial: Some(initial.into()),
            model: Some(model),
            couplings: PartialCouplings { mu0: Some(1.0), ..couplings },
            horizon: Some(Horizon::Auto),
            include_self: Some(true),
            max_horizon: None,
        }
    }

    /// Choices the published captions leave open.
    pub fn assumptions(self) -> Vec<String> {
        let mut notes = vec![
            "mu0 = 1: couplings are read as given in units of mu0".to_string(),
            "horizon = auto: smallest T = 10*2^j whose profile moves by at most 1e-3 when T doubles".to_string(),
            "include_self = true: the self-transition is ranked first".to_string(),
            "fits: log-linear least squares on positive ranked values, then a linear-space Yule refinement".to_string(),
        ];
        if self == Figure::Fig1 {
            notes.push("model = hamming: single-site flips with coupling beta".to_string());
        }
        notes
    }
}

fn equal_half() -> PartialCouplings {
    PartialCouplings { eps: Some(0.1), gamma: Some(0.5), delta: Some(0.5), eta: Some(0.5), ..Default::default() }
}
