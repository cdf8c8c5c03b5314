//! JSON scenario files. Field names carry their units; unknown fields are
//! rejected so typos fail loudly.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::geometry::{Pose6D, Region};
use crate::manifold_pbf::PbfOptions;
use crate::pso::SwarmConfig;
use crate::runner::{AoOptions, Scheme, SolverSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regions {
    #[serde(rename = "R1")]
    pub r1: RegionSpec,
    #[serde(rename = "R2")]
    pub r2: RegionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(rename = "p_B_m")]
    pub p_b_m: [f64; 3],
    #[serde(rename = "p_U_m")]
    pub p_u_m: [f64; 3],
    #[serde(rename = "p_T_m")]
    pub p_t_m: [f64; 3],
    #[serde(rename = "H_m")]
    pub h_m: f64,
    pub regions: Regions,
    /// Surface location `[x, y]` for the fixed-location baselines.
    pub fixed_location_m: [f64; 2],
    /// Orientation of the fully fixed baseline.
    pub fixed_gamma_rad: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfSection {
    pub f_c_hz: f64,
    pub beta0: f64,
    pub eta_sensing: f64,
    pub eta_comm: f64,
    pub d_spacing_over_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraysSection {
    #[serde(rename = "N_t")]
    pub n_t: usize,
    #[serde(rename = "N_r")]
    pub n_r: usize,
    #[serde(rename = "N_x")]
    pub n_x: usize,
    #[serde(rename = "N_y")]
    pub n_y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    #[serde(rename = "P_t_w")]
    pub p_t_w: f64,
    pub sigma_c2_w: f64,
    pub sigma_s2_w: f64,
    #[serde(rename = "Gamma0_dB")]
    pub gamma0_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub geometry: GeometrySection,
    pub rf: RfSection,
    pub arrays: ArraysSection,
    pub power: PowerSection,
    #[serde(default)]
    pub pso: SwarmConfig,
    #[serde(default)]
    pub pbf: PbfOptions,
    #[serde(default)]
    pub ao: AoOptions,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Experiment::reference().to_file()
    }
}

/// Everything a run needs: the physical scenario, both movable regions, the
/// baseline placement and solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub scenario: Scenario,
    pub region1: Region,
    pub region2: Region,
    pub fixed_pose: Pose6D,
    pub settings: SolverSettings,
}

impl Experiment {
    pub fn reference() -> Self {
        let scenario = Scenario::reference();
        let h = scenario.region.altitude;
        Experiment {
            region1: scenario.region,
            region2: Region {
                x_min: 0.0,
                x_max: 100.0,
                y_min: 0.0,
                y_max: 100.0,
                altitude: h,
            },
            fixed_pose: Pose6D::new(scenario.region.center(), Vector3::zeros()),
            scenario,
            settings: SolverSettings::default(),
        }
    }

    pub fn with_array(&self, n_x: usize, n_y: usize) -> Self {
        let mut e = self.clone();
        e.scenario.n_x = n_x;
        e.scenario.n_y = n_y;
        e
    }

    /// Known names: `pbf-only`, `orient-pbf`, `6d-pbf-r1`, `6d-pbf-r2`.
    pub fn scheme(&self, name: &str) -> Result<Scheme> {
        match name {
            "pbf-only" => Ok(Scheme::PbfOnly { fixed_pose: self.fixed_pose }),
            "orient-pbf" => Ok(Scheme::OrientPbf { fixed_pose: self.fixed_pose }),
            "6d-pbf-r1" => Ok(Scheme::SixDPbf { label: "r1".into(), region: self.region1 }),
            "6d-pbf-r2" => Ok(Scheme::SixDPbf { label: "r2".into(), region: self.region2 }),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }

    /// The four schemes, weakest first.
    pub fn all_schemes(&self) -> Vec<Scheme> {
        ["pbf-only", "orient-pbf", "6d-pbf-r1", "6d-pbf-r2"]
            .iter()
            .map(|n| self.scheme(n).expect("built-in scheme"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.region1.validate()?;
        self.region2.validate()?;
        self.settings.pso.validate()?;
        if self.settings.ao.rounds == 0 {
            return Err(Error::InvalidConfig("ao.rounds must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_file(file: &ScenarioFile) -> Result<Self> {
        let g = &file.geometry;
        let h = g.h_m;
        let region = |r: &RegionSpec| Region::new(r.x_min_m, r.x_max_m, r.y_min_m, r.y_max_m, h);
        let region1 = region(&g.regions.r1)?;
        let region2 = region(&g.regions.r2)?;

        let mut scenario = Scenario::reference();
        scenario.p_b = Vector3::from(g.p_b_m);
        scenario.p_u = Vector3::from(g.p_u_m);
        scenario.p_t = Vector3::from(g.p_t_m);
        scenario.set_carrier_hz(file.rf.f_c_hz);
        scenario.beta0 = file.rf.beta0;
        scenario.eta_sensing = file.rf.eta_sensing;
        scenario.eta_comm = file.rf.eta_comm;
        scenario.spacing_wavelengths = file.rf.d_spacing_over_lambda;
        scenario.n_t = file.arrays.n_t;
        scenario.n_r = file.arrays.n_r;
        scenario.n_x = file.arrays.n_x;
        scenario.n_y = file.arrays.n_y;
        scenario.p_t_w = file.power.p_t_w;
        scenario.sigma_c2_w = file.power.sigma_c2_w;
        scenario.sigma_s2_w = file.power.sigma_s2_w;
        scenario.gamma0_db = file.power.gamma0_db;
        scenario.region = region1;

        let fixed_pose = Pose6D::new(
            Vector3::new(g.fixed_location_m[0], g.fixed_location_m[1], h),
            Vector3::from(g.fixed_gamma_rad),
        );
        let e = Experiment {
            scenario,
            region1,
            region2,
            fixed_pose,
            settings: SolverSettings {
                pso: file.pso.clone(),
                pbf: file.pbf.clone(),
                ao: file.ao.clone(),
            },
        };
        e.validate()?;
        Ok(e)
    }

    pub fn to_file(&self) -> ScenarioFile {
        let s = &self.scenario;
        let spec = |r: &Region| RegionSpec {
            x_min_m: r.x_min,
            x_max_m: r.x_max,
            y_min_m: r.y_min,
            y_max_m: r.y_max,
        };
        let gamma = self.fixed_pose.gamma();
        ScenarioFile {
            geometry: GeometrySection {
                p_b_m: s.p_b.into(),
                p_u_m: s.p_u.into(),
                p_t_m: s.p_t.into(),
                h_m: self.region1.altitude,
                regions: Regions {
                    r1: spec(&self.region1),
                    r2: spec(&self.region2),
                },
                fixed_location_m: [self.fixed_pose.location.x, self.fixed_pose.location.y],
                fixed_gamma_rad: gamma.into(),
            },
            rf: RfSection {
                f_c_hz: s.carrier_hz(),
                beta0: s.beta0,
                eta_sensing: s.eta_sensing,
                eta_comm: s.eta_comm,
                d_spacing_over_lambda: s.spacing_wavelengths,
            },
            arrays: ArraysSection {
                n_t: s.n_t,
                n_r: s.n_r,
                n_x: s.n_x,
                n_y: s.n_y,
            },
            power: PowerSection {
                p_t_w: s.p_t_w,
                sigma_c2_w: s.sigma_c2_w,
                sigma_s2_w: s.sigma_s2_w,
                gamma0_db: s.gamma0_db,
            },
            pso: self.settings.pso.clone(),
            pbf: self.settings.pbf.clone(),
            ao: self.settings.ao.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_file(&file)
    }
}
