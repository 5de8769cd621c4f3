//! Run-level switches: certified versus scaled constants and work budgets.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presentation::AbelianPresentation;
use crate::rational::{fmt_ratio, serde_big_ratio, serde_opt_big_ratio};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Certified,
    Scaled,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "certified" => Ok(Mode::Certified),
            "scaled" => Ok(Mode::Scaled),
            _ => Err(Error::Argument(format!("unknown mode {s:?}"))),
        }
    }
}

/// Replacement values for the constants; absent fields keep the paper values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantOverrides {
    #[serde(rename = "C_d", default, with = "serde_opt_big_ratio", skip_serializing_if = "Option::is_none")]
    pub c_d: Option<BigRational>,
    #[serde(rename = "t_E", default, with = "serde_opt_big_ratio", skip_serializing_if = "Option::is_none")]
    pub t_e: Option<BigRational>,
    #[serde(rename = "C_Box", default, with = "serde_opt_big_ratio", skip_serializing_if = "Option::is_none")]
    pub c_box: Option<BigRational>,
    #[serde(rename = "h", default, with = "serde_opt_big_ratio", skip_serializing_if = "Option::is_none")]
    pub h: Option<BigRational>,
}

impl ConstantOverrides {
    pub fn is_empty(&self) -> bool {
        self.c_d.is_none() && self.t_e.is_none() && self.c_box.is_none() && self.h.is_none()
    }

    /// Fields of `other` win.
    pub fn merged(&self, other: &ConstantOverrides) -> ConstantOverrides {
        ConstantOverrides {
            c_d: other.c_d.clone().or_else(|| self.c_d.clone()),
            t_e: other.t_e.clone().or_else(|| self.t_e.clone()),
            c_box: other.c_box.clone().or_else(|| self.c_box.clone()),
            h: other.h.clone().or_else(|| self.h.clone()),
        }
    }
}

/// The constants a run actually uses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    pub mode: Mode,
    #[serde(rename = "C_d", with = "serde_big_ratio")]
    pub c_d: BigRational,
    #[serde(rename = "t_E", with = "serde_big_ratio")]
    pub t_e: BigRational,
    #[serde(rename = "C_Box", with = "serde_big_ratio")]
    pub c_box: BigRational,
    #[serde(with = "serde_big_ratio")]
    pub h: BigRational,
    /// Overrides exactly as supplied (empty in certified mode).
    pub overrides: ConstantOverrides,
}

fn int(b: &BigInt) -> BigRational {
    BigRational::from_integer(b.clone())
}

impl Constants {
    pub fn certified(p: &AbelianPresentation) -> Constants {
        Constants {
            mode: Mode::Certified,
            c_d: int(&p.c_d),
            t_e: int(&p.t_e),
            c_box: int(&p.c_box),
            h: int(&p.h()),
            overrides: ConstantOverrides::default(),
        }
    }

    /// Scaled mode: each supplied override replaces the paper value. When `h`
    /// is not supplied it follows `16 d C_d + 1` with the effective `C_d`.
    pub fn scaled(p: &AbelianPresentation, o: &ConstantOverrides) -> Result<Constants> {
        let c_d = o.c_d.clone().unwrap_or_else(|| int(&p.c_d));
        let t_e = o.t_e.clone().unwrap_or_else(|| int(&p.t_e));
        let c_box = o.c_box.clone().unwrap_or_else(|| int(&p.c_box));
        let h = o.h.clone().unwrap_or_else(|| {
            BigRational::from_integer(BigInt::from(16 * p.d as u64)) * &c_d + BigRational::one()
        });
        for (name, v) in [("C_d", &c_d), ("t_E", &t_e), ("C_Box", &c_box)] {
            if !v.is_positive() {
                return Err(Error::Argument(format!("{name} must be positive")));
            }
        }
        if h <= BigRational::one() {
            return Err(Error::Argument("h must exceed 1".into()));
        }
        Ok(Constants { mode: Mode::Scaled, c_d, t_e, c_box, h, overrides: o.clone() })
    }

    pub fn for_mode(p: &AbelianPresentation, mode: Mode, o: &ConstantOverrides) -> Result<Constants> {
        match mode {
            Mode::Certified => {
                if !o.is_empty() {
                    return Err(Error::Argument("constant overrides require --mode scaled".into()));
                }
                Ok(Constants::certified(p))
            }
            Mode::Scaled => Constants::scaled(p, o),
        }
    }

    /// A bound whose hypotheses involve the constants is only binding when the
    /// constants are the paper's.
    pub fn binding(&self) -> bool {
        self.mode == Mode::Certified
    }

    pub fn describe(&self) -> String {
        format!(
            "mode={:?} C_d={} t_E={} C_Box={} h={}",
            self.mode,
            fmt_ratio(&self.c_d),
            fmt_ratio(&self.t_e),
            fmt_ratio(&self.c_box),
            fmt_ratio(&self.h)
        )
    }
}

#[derive(Clone, Debug)]
pub struct Budget {
    /// Cap on enumerated points for any single box, ball or lattice window.
    pub points: u64,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget { points: 20_000_000 }
    }
}
