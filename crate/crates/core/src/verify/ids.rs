//! Check identifiers and their mapping onto right-hand sides.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entropy::RhsId;
use crate::error::{config, Error, Result};

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($var:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name { $($var),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$var),+];
            pub fn name(&self) -> &'static str {
                match self { $($name::$var => $s),+ }
            }
            fn parse(s: &str) -> Option<Self> {
                match s { $($s => Some($name::$var),)+ _ => None }
            }
        }
    };
}

named_enum!(
    /// Exact identities: LHS by finite differences, RHS by quadrature.
    IdentityId {
        GeoWm => "geo_wm",
        HeatWm => "heat_wm",
        HeatCdkm => "heat_cdkm",
        GeoDissipation => "geo_dissipation",
        LangevinMf3 => "langevin_mf3",
        Hamiltonian2nd => "hamiltonian_2nd",
        Hamiltonian1st => "hamiltonian_1st",
        WComparison => "w_comparison",
        ModelIdentity => "model_identity",
        FdLangevin => "fd_langevin",
        FdVh => "fd_vh",
        FdW => "fd_w",
        WExp => "w_exp",
    }
);

named_enum!(
    /// One-sided checks: pass when min(LHS − RHS) ≥ −slack.
    InequalityId {
        GeoMonotone => "geo_monotone",
        HeatMonotone => "heat_monotone",
        CsBound => "cs_bound",
        EksGeo => "eks_geo",
        EksGrad => "eks_grad",
        EksLangevin => "eks_langevin",
        VorticityDecay => "vorticity_decay",
        Closedness => "closedness",
        WhcMonotone => "whc_monotone",
        WComparisonMonotone => "w_comparison_monotone",
    }
);

named_enum!(
    /// Comparisons against independent oracles.
    OracleId {
        ModelResidual => "model_residual",
        EulerEquivalence => "euler_equivalence",
        PotentialRecovery => "potential_recovery",
        HopfLax => "hopf_lax",
        ClosedForms => "closed_forms",
        FiniteDimOracle => "finite_dim_oracle",
    }
);

impl IdentityId {
    /// The right-hand side each identity is checked against. The model
    /// identity uses the Langevin RHS on the closed-form model, where the
    /// square term vanishes.
    pub fn rhs(&self) -> RhsId {
        match self {
            IdentityId::GeoWm => RhsId::GeoWm,
            IdentityId::HeatWm => RhsId::HeatWm,
            IdentityId::HeatCdkm => RhsId::HeatCdkm,
            IdentityId::GeoDissipation => RhsId::GeoDissipation,
            IdentityId::LangevinMf3 => RhsId::LangevinMf3,
            IdentityId::Hamiltonian2nd => RhsId::Hamiltonian2nd,
            IdentityId::Hamiltonian1st => RhsId::Hamiltonian1st,
            IdentityId::WComparison => RhsId::WComparison,
            IdentityId::ModelIdentity => RhsId::LangevinMf3,
            IdentityId::FdLangevin => RhsId::FdHessian,
            IdentityId::FdVh => RhsId::FdVh,
            IdentityId::FdW => RhsId::FdWh,
            IdentityId::WExp => RhsId::WExpH,
        }
    }
}

impl InequalityId {
    /// Bound the LHS is compared with; `None` for the structural checks
    /// (vorticity) and the zero-RHS monotonicity checks.
    pub fn rhs(&self) -> Option<RhsId> {
        match self {
            InequalityId::CsBound => Some(RhsId::CsBound),
            InequalityId::EksGeo => Some(RhsId::EksGeo),
            InequalityId::EksGrad => Some(RhsId::EksGrad),
            InequalityId::EksLangevin => Some(RhsId::EksLangevin),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CheckId {
    Identity(IdentityId),
    Inequality(InequalityId),
    Oracle(OracleId),
}

impl CheckId {
    pub fn all() -> Vec<CheckId> {
        let mut v: Vec<CheckId> = IdentityId::ALL.iter().map(|&i| CheckId::Identity(i)).collect();
        v.extend(InequalityId::ALL.iter().map(|&i| CheckId::Inequality(i)));
        v.extend(OracleId::ALL.iter().map(|&i| CheckId::Oracle(i)));
        v
    }

    pub fn name(&self) -> &'static str {
        match self {
            CheckId::Identity(i) => i.name(),
            CheckId::Inequality(i) => i.name(),
            CheckId::Oracle(i) => i.name(),
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CheckId::Identity(_) => "identity",
            CheckId::Inequality(_) => "inequality",
            CheckId::Oracle(_) => "oracle",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(i) = IdentityId::parse(s) {
            return Ok(CheckId::Identity(i));
        }
        if let Some(i) = InequalityId::parse(s) {
            return Ok(CheckId::Inequality(i));
        }
        if let Some(i) = OracleId::parse(s) {
            return Ok(CheckId::Oracle(i));
        }
        let known: Vec<&str> = CheckId::all().iter().map(|c| c.name()).collect();
        config(format!("unknown check id `{s}` (known: {})", known.join(", ")))
    }
}

impl TryFrom<String> for CheckId {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse().map_err(|e: Error| match e {
            Error::Config(m) | Error::Domain(m) | Error::Numeric(m) => m,
        })
    }
}

impl From<CheckId> for String {
    fn from(c: CheckId) -> String {
        c.name().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn identity_mapping_is_total_and_injective_on_integrals() {
        let mut seen = BTreeSet::new();
        for id in IdentityId::ALL {
            let rhs = id.rhs();
            // the model identity shares the Langevin right-hand side on purpose
            if *id != IdentityId::ModelIdentity {
                assert!(seen.insert(rhs), "{} maps to an RHS already used", id.name());
            }
            assert!(RhsId::ALL.contains(&rhs));
        }
        assert_eq!(seen.len(), IdentityId::ALL.len() - 1);
    }

    #[test]
    fn names_round_trip() {
        let all = CheckId::all();
        let names: BTreeSet<&str> = all.iter().map(|c| c.name()).collect();
        assert_eq!(names.len(), all.len());
        for c in all {
            assert_eq!(c.name().parse::<CheckId>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<CheckId>(&json).unwrap(), c);
        }
        assert!("geo_wn".parse::<CheckId>().is_err());
        assert!(serde_json::from_str::<CheckId>("\"nope\"").is_err());
    }
}
