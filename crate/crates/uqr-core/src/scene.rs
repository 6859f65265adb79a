//! Scene assembly: a declarative configuration names one of the map
//! constructions (power, Chebyshev, Joukowsky family, lift), a symmetry
//! group, a degree, and an optional quasiconformal deformation; building
//! it validates everything and yields an iterable map plus typed access
//! to its ingredients for the verification suite.

use crate::automorphic::{AutomorphicMap, MapKind, SineProfile};
use crate::crystal::{self, AdmissibilityCertificate};
use crate::dynamics::Thresholds;
use crate::error::{Error, Result};
use crate::geometry::{ExtendedPoint, Mat};
use crate::schroeder::{
    ChebMap, ConformalAutomorphism, DeformedMap, HdMap, LiftedMap, PowerMap, QcDeformation, UqrMap,
};
use serde::{Deserialize, Serialize};

/// Which construction the scene realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapChoice {
    /// Exponential-type conjugation: the analogue of w ↦ w^d.
    Power,
    /// Trigonometric-type conjugation: the analogue of the degree-d
    /// Chebyshev polynomial.
    Chebyshev,
    /// The degree-one Joukowsky-type map (w + 1/w)/2.
    Joukowsky,
    /// The general Joukowsky family (w^d + w^{-d})/2.
    #[serde(rename = "h-d", alias = "h_d", alias = "hd")]
    HD,
    /// The branch-selected lift of a Chebyshev map, which recovers the
    /// power map of the same degree.
    Lifted,
}

impl MapChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            MapChoice::Power => "power",
            MapChoice::Chebyshev => "chebyshev",
            MapChoice::Joukowsky => "joukowsky",
            MapChoice::HD => "h-d",
            MapChoice::Lifted => "lifted",
        }
    }

    /// Parse a user-facing name (accepts the serde aliases).
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "power" => Ok(MapChoice::Power),
            "chebyshev" | "cheb" => Ok(MapChoice::Chebyshev),
            "joukowsky" => Ok(MapChoice::Joukowsky),
            "h-d" | "h_d" | "hd" => Ok(MapChoice::HD),
            "lifted" | "lift" => Ok(MapChoice::Lifted),
            other => Err(Error::InvalidConfig(format!("unknown map kind '{other}'"))),
        }
    }
}

fn default_dimension() -> usize {
    2
}
fn default_seed() -> u64 {
    17
}

/// A fully declarative scene description; every field has a default so a
/// config file can set only what it cares about.  Flags override fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Ambient dimension, 2 or 3.
    pub dimension: usize,
    /// Symmetry group name; defaults to the canonical group for the
    /// dimension and map kind.
    pub group: Option<String>,
    pub map: MapChoice,
    /// Degree parameter d; defaults to 2 (1 for the Joukowsky map).
    pub degree: Option<usize>,
    /// Override for the uniform scale of the conformal automorphism A.
    /// Non-integer values are rejected by the admissibility check — this
    /// is the supported way to build a deliberately broken scene.
    pub scale: Option<f64>,
    /// Compose A with a rotation by this many quarter turns in the
    /// (x₁, x₂)-plane (exact matrix entries, no rounding).
    pub quarter_turns: u8,
    /// Spatial sine-type profile (ignored in dimension 2).
    pub profile: SineProfile,
    pub deformation: Option<QcDeformation>,
    pub thresholds: Thresholds,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            dimension: default_dimension(),
            group: None,
            map: MapChoice::Power,
            degree: None,
            scale: None,
            quarter_turns: 0,
            profile: SineProfile::Cell,
            deformation: None,
            thresholds: Thresholds::default(),
            seed: default_seed(),
        }
    }
}

impl SceneConfig {
    /// The degree after defaulting, with the per-construction floor
    /// enforced (power/chebyshev/lifted need d ≥ 2, joukowsky is d = 1).
    pub fn effective_degree(&self) -> Result<usize> {
        let d = self.degree.unwrap_or(match self.map {
            MapChoice::Joukowsky => 1,
            _ => 2,
        });
        match self.map {
            MapChoice::Power | MapChoice::Chebyshev | MapChoice::Lifted => {
                if d < 2 {
                    return Err(Error::InvalidConfig(format!(
                        "{} scenes need degree at least 2, got {d}",
                        self.map.as_str()
                    )));
                }
            }
            MapChoice::Joukowsky => {
                if d != 1 {
                    return Err(Error::InvalidConfig(
                        "the Joukowsky scene is the d = 1 member; use map = \"h-d\" for higher d"
                            .into(),
                    ));
                }
            }
            MapChoice::HD => {
                if d < 1 {
                    return Err(Error::InvalidConfig("h-d scenes need degree at least 1".into()));
                }
            }
        }
        Ok(d)
    }

    /// One-line human summary used in reports.
    pub fn describe(&self) -> String {
        let d = self.degree.unwrap_or(match self.map {
            MapChoice::Joukowsky => 1,
            _ => 2,
        });
        let mut s = format!("{} d={} n={}", self.map.as_str(), d, self.dimension);
        if let Some(scale) = self.scale {
            s.push_str(&format!(" scale={scale}"));
        }
        if self.quarter_turns % 4 != 0 {
            s.push_str(&format!(" quarter-turns={}", self.quarter_turns % 4));
        }
        if self.dimension == 3 && matches!(self.profile, SineProfile::Averaged) {
            s.push_str(" profile=averaged");
        }
        if let Some(def) = &self.deformation {
            s.push_str(&format!(" deformed={def:?}"));
        }
        s
    }

    pub fn build(&self) -> Result<BuiltScene> {
        match self.dimension {
            2 => Ok(BuiltScene::D2(build_scene::<2>(self)?)),
            3 => Ok(BuiltScene::D3(build_scene::<3>(self)?)),
            n => Err(Error::InvalidConfig(format!("dimension must be 2 or 3, got {n}"))),
        }
    }
}

/// A built scene in either supported dimension.
pub enum BuiltScene {
    D2(Scene<2>),
    D3(Scene<3>),
}

impl BuiltScene {
    pub fn config(&self) -> &SceneConfig {
        match self {
            BuiltScene::D2(s) => &s.config,
            BuiltScene::D3(s) => &s.config,
        }
    }
}

impl std::fmt::Debug for BuiltScene {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BuiltScene({})", self.config().describe())
    }
}

/// The underlying (undeformed) construction with typed access.
pub enum BaseMap<const N: usize> {
    Power(PowerMap<N>),
    Cheb(ChebMap<N>),
    Hd(HdMap<N>),
    Lifted(LiftedMap<N>),
}

impl<const N: usize> BaseMap<N> {
    pub fn as_uqr(&self) -> &dyn UqrMap<N> {
        match self {
            BaseMap::Power(m) => m,
            BaseMap::Cheb(m) => m,
            BaseMap::Hd(m) => m,
            BaseMap::Lifted(m) => m,
        }
    }

    /// The automorphic maps the construction is built from.
    pub fn automorphic_parts(&self) -> Vec<&AutomorphicMap<N>> {
        match self {
            BaseMap::Power(m) => vec![&m.automorphic],
            BaseMap::Cheb(m) => vec![&m.automorphic],
            BaseMap::Hd(m) => vec![&m.zorich, &m.sine],
            BaseMap::Lifted(m) => vec![&m.cheb.automorphic, &m.h1.zorich],
        }
    }

    /// The automorphic map whose omitted values the scene inherits.
    pub fn carrier(&self) -> &AutomorphicMap<N> {
        match self {
            BaseMap::Power(m) => &m.automorphic,
            BaseMap::Cheb(m) => &m.automorphic,
            BaseMap::Hd(m) => &m.sine,
            BaseMap::Lifted(m) => &m.h1.zorich,
        }
    }

    /// The conformal automorphism A, where the construction has one.
    pub fn conformal(&self) -> Option<&ConformalAutomorphism<N>> {
        match self {
            BaseMap::Power(m) => Some(&m.a),
            BaseMap::Cheb(m) => Some(&m.a),
            BaseMap::Lifted(m) => Some(&m.cheb.a),
            BaseMap::Hd(_) => None,
        }
    }
}

/// A validated, buildable scene: the base construction plus an optional
/// deformed wrapper (the deformed copy owns an identically-built base).
pub struct Scene<const N: usize> {
    pub config: SceneConfig,
    pub base: BaseMap<N>,
    pub deformed: Option<DeformedMap<N>>,
}

impl<const N: usize> Scene<N> {
    /// The map the scene iterates: the deformed one when a deformation
    /// is configured, the base construction otherwise.
    pub fn active_map(&self) -> &dyn UqrMap<N> {
        match &self.deformed {
            Some(d) => d,
            None => self.base.as_uqr(),
        }
    }

    pub fn omitted_values(&self) -> Vec<ExtendedPoint<N>> {
        self.base.carrier().omitted_values()
    }

    /// Admissibility certificate of the scale/rotation pair against the
    /// relevant group (for the Joukowsky family: the integer scaling d
    /// against the exponential-type group).
    pub fn admissibility(&self) -> AdmissibilityCertificate {
        match (&self.base, self.base.conformal()) {
            (BaseMap::Hd(m), _) => m.zorich.group.check_admissible(m.d as f64, &Mat::identity()),
            (base, Some(a)) => {
                let group = &base.automorphic_parts()[0].group;
                group.check_admissible(a.scale, &a.orthogonal)
            }
            _ => unreachable!("every base map exposes either A or a degree"),
        }
    }
}

/// Exact rotation by k quarter turns in the (0,1) coordinate plane.
fn quarter_turn_matrix<const N: usize>(k: u8) -> Mat<N> {
    let mut m = Mat::identity();
    let (c, s): (f64, f64) = match k % 4 {
        0 => (1.0, 0.0),
        1 => (0.0, 1.0),
        2 => (-1.0, 0.0),
        _ => (0.0, -1.0),
    };
    m.0[0][0] = c;
    m.0[0][1] = -s;
    m.0[1][0] = s;
    m.0[1][1] = c;
    m
}

/// Group names for (dimension, role): role 0 = exponential-type, 1 =
/// sine-type.
fn default_group_name(dimension: usize, kind: MapKind) -> &'static str {
    match (dimension, kind) {
        (2, MapKind::Zorich) => "zorich2",
        (2, MapKind::Sine) => "sine2",
        (3, MapKind::Zorich) => "p2",
        _ => "p2-sine",
    }
}

fn build_zorich<const N: usize>(name: &str) -> Result<AutomorphicMap<N>> {
    match N {
        2 => {
            let g = crystal::builtin_2d(name)?;
            let m = AutomorphicMap::<2>::zorich(g)?;
            Ok(downcast_map(m))
        }
        3 => {
            let g = crystal::builtin_3d(name)?;
            let m = AutomorphicMap::<3>::zorich(g)?;
            Ok(downcast_map(m))
        }
        n => Err(Error::InvalidConfig(format!("dimension must be 2 or 3, got {n}"))),
    }
}

fn build_sine<const N: usize>(cfg: &SceneConfig, name: &str) -> Result<AutomorphicMap<N>> {
    match N {
        2 => {
            let g = crystal::builtin_2d(name)?;
            let m = AutomorphicMap::<2>::sine(g)?;
            Ok(downcast_map(m))
        }
        3 => {
            let g = crystal::builtin_3d(name)?;
            let m = AutomorphicMap::<3>::sine(g, cfg.profile)?;
            Ok(downcast_map(m))
        }
        n => Err(Error::InvalidConfig(format!("dimension must be 2 or 3, got {n}"))),
    }
}

/// Convert `AutomorphicMap<2|3>` to `AutomorphicMap<N>` inside a branch
/// where the runtime dimension has already been matched against N.
fn downcast_map<const M: usize, const N: usize>(m: AutomorphicMap<M>) -> AutomorphicMap<N> {
    assert_eq!(M, N, "dimension dispatch mismatch");
    // Safe by the assertion: the two types are identical instantiations.
    let boxed: Box<dyn std::any::Any> = Box::new(m);
    *boxed.downcast::<AutomorphicMap<N>>().expect("checked dimension")
}

fn build_scene<const N: usize>(cfg: &SceneConfig) -> Result<Scene<N>> {
    let d = cfg.effective_degree()?;
    if cfg.scale.is_some() && matches!(cfg.map, MapChoice::Joukowsky | MapChoice::HD) {
        return Err(Error::InvalidConfig(
            "the Joukowsky family has no conformal factor to rescale".into(),
        ));
    }
    if let Some(def) = &cfg.deformation {
        def.validate()?;
    }
    let scale = cfg.scale.unwrap_or(d as f64);
    let rotation = quarter_turn_matrix::<N>(cfg.quarter_turns);
    let a = ConformalAutomorphism::new(scale, rotation)?;

    let zorich_name = default_group_name(N, MapKind::Zorich);
    let sine_name = default_group_name(N, MapKind::Sine);
    let named = |fallback: &'static str| -> Result<String> {
        match &cfg.group {
            None => Ok(fallback.to_string()),
            Some(g) => Ok(g.clone()),
        }
    };

    let base = match cfg.map {
        MapChoice::Power => {
            let h = build_zorich::<N>(&named(zorich_name)?)?;
            BaseMap::Power(PowerMap::new(h, a)?)
        }
        MapChoice::Chebyshev => {
            let h = build_sine::<N>(cfg, &named(sine_name)?)?;
            BaseMap::Cheb(ChebMap::new(h, a)?)
        }
        MapChoice::Joukowsky | MapChoice::HD => {
            if let Some(g) = &cfg.group {
                if g != zorich_name && g != sine_name {
                    return Err(Error::InvalidConfig(format!(
                        "the Joukowsky family in dimension {N} uses the built-in pair \
                         ({zorich_name}, {sine_name}); got '{g}'"
                    )));
                }
            }
            let z = build_zorich::<N>(zorich_name)?;
            let s = build_sine::<N>(cfg, sine_name)?;
            BaseMap::Hd(HdMap::new(z, s, d)?)
        }
        MapChoice::Lifted => {
            let s = build_sine::<N>(cfg, &named(sine_name)?)?;
            let cheb = ChebMap::new(s, a)?;
            let z = build_zorich::<N>(zorich_name)?;
            let s1 = build_sine::<N>(cfg, sine_name)?;
            let h1 = HdMap::new(z, s1, 1)?;
            BaseMap::Lifted(LiftedMap::new(cheb, h1)?)
        }
    };

    // The deformed wrapper owns its own copy of the base construction.
    let deformed = match &cfg.deformation {
        None => None,
        Some(def) => {
            let mut clean = cfg.clone();
            clean.deformation = None;
            let inner: Box<dyn UqrMap<N>> = match build_scene::<N>(&clean)?.base {
                BaseMap::Power(m) => Box::new(m),
                BaseMap::Cheb(m) => Box::new(m),
                BaseMap::Hd(m) => Box::new(m),
                BaseMap::Lifted(m) => Box::new(m),
            };
            Some(DeformedMap::new(inner, *def)?)
        }
    };

    Ok(Scene { config: cfg.clone(), base, deformed })
}
