//! Named families of Bäcklund pairs and the routes that turn them into maps.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backlund::{soliton_theta, w_from_theta, BtPair, SolitonTheta};
use crate::error::{Error, Result};
use crate::field::{GridSpec, MapField, ScalarField};
use crate::kernel::OdeSpec;
use crate::map_builder::{build_newclass, build_quadrature, build_soliton, BaseValues};
use crate::sinh_gordon::{example3, example5, make_kenmotsu, make_separable, KenmotsuParams, OdeCoefficients, SeparableSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Example3,
    Example5,
    Example6,
    Kenmotsu,
    SeparableOde,
    Soliton,
}

impl Family {
    pub fn required_parameters(&self) -> &'static [&'static str] {
        match self {
            Family::Example3 | Family::Example5 | Family::Example6 => &[],
            Family::Kenmotsu => &["alpha", "beta", "w0"],
            Family::SeparableOde => &["a", "b", "c", "f0", "df0", "g0", "dg0"],
            Family::Soliton => &["theta0", "dtheta0", "w00"],
        }
    }

    pub fn default_route(&self) -> Route {
        match self {
            Family::Example3 => Route::Quadrature,
            Family::Example5 | Family::Kenmotsu | Family::SeparableOde => Route::Newclass,
            Family::Example6 | Family::Soliton => Route::Soliton,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Example3 => "example3",
            Family::Example5 => "example5",
            Family::Example6 => "example6",
            Family::Kenmotsu => "kenmotsu",
            Family::SeparableOde => "separable_ode",
            Family::Soliton => "soliton",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Quadrature,
    Newclass,
    Soliton,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Quadrature => "quadrature",
            Route::Newclass => "newclass",
            Route::Soliton => "soliton",
        })
    }
}

/// A resolved family: its pair and whatever closed-form data it carries.
#[derive(Clone)]
pub struct Construction {
    pub family: Family,
    pub pair: BtPair,
    pub separable: Option<SeparableSolution>,
    pub soliton: Option<(Arc<SolitonTheta>, f64)>,
}

impl fmt::Debug for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Construction").field("family", &self.family).field("class", &self.pair.class).finish()
    }
}

fn range_with_origin(lo: f64, hi: f64) -> (f64, f64) {
    let pad = 0.05 * (hi - lo);
    ((lo - pad).min(0.0), (hi + pad).max(0.0))
}

fn param(p: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = *p.get(key).ok_or_else(|| Error::InvalidArgument(format!("missing parameter `{key}`")))?;
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("parameter `{key}` is not finite")));
    }
    Ok(v)
}

impl Construction {
    /// Resolve `family` with `params` for use on `grid`.
    pub fn new(family: Family, params: &BTreeMap<String, f64>, grid: &GridSpec, spec: &OdeSpec) -> Result<Self> {
        let required = family.required_parameters();
        if let Some(k) = params.keys().find(|k| !required.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("unknown parameter `{k}` for family {family}")));
        }
        let xr = range_with_origin(grid.x_min, grid.x_max);
        let yr = range_with_origin(grid.y_min, grid.y_max);
        let separable = |sol: SeparableSolution| -> Result<Self> {
            Ok(Self { family, pair: BtPair::bt0(sol.clone())?, separable: Some(sol), soliton: None })
        };
        match family {
            Family::Example3 => Ok(Self { family, pair: BtPair::example3(), separable: Some(example3()), soliton: None }),
            Family::Example5 => separable(example5()),
            Family::Kenmotsu => {
                let p = KenmotsuParams::new(param(params, "alpha")?, param(params, "beta")?, param(params, "w0")?)?;
                separable(make_kenmotsu(p, xr, yr, spec)?)
            }
            Family::SeparableOde => {
                let c = OdeCoefficients::new(param(params, "a")?, param(params, "b")?, param(params, "c")?)?;
                let sol = make_separable(
                    c,
                    param(params, "f0")?,
                    param(params, "df0")?,
                    param(params, "g0")?,
                    param(params, "dg0")?,
                    xr,
                    yr,
                    spec,
                )?;
                separable(sol)
            }
            Family::Example6 | Family::Soliton => {
                let (t0, d0, w00) = if family == Family::Example6 {
                    (0.0, 1.0, 0.0)
                } else {
                    (param(params, "theta0")?, param(params, "dtheta0")?, param(params, "w00")?)
                };
                let st = Arc::new(soliton_theta(t0, d0, xr, spec)?);
                let pair = BtPair::soliton(w_from_theta(st.clone(), w00)?);
                Ok(Self { family, pair, separable: None, soliton: Some((st, w00)) })
            }
        }
    }

    /// Sampled `(w, θ)`.
    pub fn sample(&self, grid: GridSpec) -> Result<(ScalarField, ScalarField)> {
        self.pair.sample(grid)
    }

    pub fn build(&self, route: Route, base: BaseValues, grid: GridSpec) -> Result<MapField> {
        match route {
            Route::Quadrature => build_quadrature(&self.pair, base, grid),
            Route::Newclass => match (&self.separable, self.pair.class) {
                (Some(sol), crate::backlund::BtClass::Bt0) => build_newclass(sol, base, grid),
                _ => Err(Error::InvalidArgument(format!("route newclass needs a BT0 separable family, not {}", self.family))),
            },
            Route::Soliton => match &self.soliton {
                Some((st, w00)) => build_soliton(st.clone(), *w00, base, grid),
                None => Err(Error::InvalidArgument(format!("route soliton needs a soliton family, not {}", self.family))),
            },
        }
    }
}
