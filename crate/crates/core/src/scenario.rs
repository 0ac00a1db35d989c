//! Versioned JSON scenario files.
//!
//! Parsing happens in two passes: serde decodes the document (errors carry the
//! JSON path plus line/column), then [`ScenarioFile::into_scenario`] checks the
//! semantic invariants and builds the validated domain objects.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::contact::ContactModel;
use crate::controller::ControllerConfig;
use crate::dynamics::estimate_mass_eigenvalues;
use crate::error::{Error, Result};
use crate::kinematics::{ExtendedArmModel, InertialBounds, InertialParams, JointModel, LinkModel, Obstacle};
use crate::planner::SolverParams;
use crate::setops::{Interval, PzOptions, Zonotope};
use crate::traj::{TimePartition, DEFAULT_ETA1};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub robot: RobotSpec,
    pub contact: ContactSpec,
    #[serde(default)]
    pub obstacles: Vec<ZonotopeSpec>,
    /// Obstacles revealed to the planner from a given iteration on.
    #[serde(default)]
    pub script: Vec<ScriptSpec>,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub partition: PartitionSpec,
    #[serde(default)]
    pub trajectory: TrajectorySpec,
    pub controller: ControllerSpec,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub pz: PzOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub joints: Vec<JointSpec>,
    pub links: Vec<LinkSpec>,
    /// Per actuated joint `[lo, hi]`; defaults to `[-pi, pi]`.
    #[serde(default)]
    pub joint_limits: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Revolute,
    Fixed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    #[serde(rename = "type")]
    pub kind: JointType,
    #[serde(default)]
    pub axis: Option<[f64; 3]>,
    pub offset: [f64; 3],
    /// Row-major fixed rotation from the parent frame; identity when absent.
    #[serde(default)]
    pub rotation: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub volume: ZonotopeSpec,
    pub mass: f64,
    pub com: [f64; 3],
    /// xx, yy, zz, xy, xz, yz
    pub inertia: [f64; 6],
    /// Relative mass/inertia uncertainty (CoM exact).
    #[serde(default)]
    pub uncertainty: Option<f64>,
    /// Explicit interval bounds; exclusive with `uncertainty`.
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub mass: [f64; 2],
    pub com: [[f64; 2]; 3],
    pub inertia: [[f64; 2]; 6],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZonotopeSpec {
    pub center: Vec<f64>,
    #[serde(default)]
    pub generators: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrInterval {
    Scalar(f64),
    Interval([f64; 2]),
}

impl ScalarOrInterval {
    fn interval(&self) -> [f64; 2] {
        match *self {
            ScalarOrInterval::Scalar(v) => [v, v],
            ScalarOrInterval::Interval(iv) => iv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSpec {
    /// Friction coefficient; only the lower bound is used.
    pub mu: ScalarOrInterval,
    /// Contact-disk radius; only the lower bound is used.
    pub radius: ScalarOrInterval,
    #[serde(default = "default_normal")]
    pub normal: [f64; 3],
}

fn default_normal() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptSpec {
    pub before_iteration: usize,
    pub obstacle: ZonotopeSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub dt: f64,
    pub t_p: f64,
    pub t_fin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerJoint {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerJoint {
    fn expand(&self, n: usize, what: &str) -> std::result::Result<Vec<f64>, String> {
        match self {
            PerJoint::Uniform(v) => Ok(vec![*v; n]),
            PerJoint::Each(v) if v.len() == n => Ok(v.clone()),
            PerJoint::Each(v) => Err(format!("{what} has {} entries for {n} joints", v.len())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    /// Half-range of the final position around the initial one.
    #[serde(default = "default_eta1")]
    pub eta1: PerJoint,
    /// Straight-line planner step (rad).
    #[serde(default = "default_hlp_step")]
    pub hlp_step: f64,
    #[serde(default = "default_goal_tolerance")]
    pub goal_tolerance: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec { eta1: default_eta1(), hlp_step: default_hlp_step(), goal_tolerance: default_goal_tolerance() }
    }
}

fn default_eta1() -> PerJoint {
    PerJoint::Uniform(DEFAULT_ETA1)
}

fn default_hlp_step() -> f64 {
    0.1
}

fn default_goal_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EigenSpec {
    Value(f64),
    Keyword(EigenKeyword),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenKeyword {
    Estimate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub k_r: PerJoint,
    pub v_m: f64,
    #[serde(default = "default_alpha_c")]
    pub alpha_c: f64,
    pub sigma_m: EigenSpec,
    #[serde(rename = "sigma_M", default = "default_estimate")]
    pub sigma_big_m: EigenSpec,
    /// Samples used when an eigenvalue bound is estimated.
    #[serde(default = "default_eig_samples")]
    pub eig_samples: usize,
}

fn default_alpha_c() -> f64 {
    1.0
}

fn default_estimate() -> EigenSpec {
    EigenSpec::Keyword(EigenKeyword::Estimate)
}

fn default_eig_samples() -> usize {
    2000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { samples: default_samples() }
    }
}

fn default_samples() -> usize {
    10_000
}

/// Obstacle revealed before a given planning iteration.
#[derive(Debug, Clone)]
pub struct ScriptedObstacle {
    pub before_iteration: usize,
    pub obstacle: Obstacle,
}

/// How the mass-matrix eigenvalue bounds were obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenProvenance {
    pub sigma_m_estimated: bool,
    pub sigma_big_m_estimated: bool,
    /// Configurations sampled when either bound was estimated.
    pub samples: usize,
}

/// Validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: ExtendedArmModel,
    pub contact: ContactModel,
    pub obstacles: Vec<Obstacle>,
    pub script: Vec<ScriptedObstacle>,
    pub joint_limits: Vec<Interval>,
    pub q_start: Vec<f64>,
    pub q_goal: Vec<f64>,
    pub partition: TimePartition,
    pub eta1: Vec<f64>,
    pub hlp_step: f64,
    pub goal_tolerance: f64,
    pub controller: ControllerConfig,
    pub eigen: EigenProvenance,
    pub solver: SolverParams,
    pub verify_samples: usize,
    pub pz: PzOptions,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Scenario> {
        ScenarioFile::from_json_str(text)?.into_scenario()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Scenario::from_json_str(&text)
    }

    pub fn n_q(&self) -> usize {
        self.model.n_q()
    }

    /// Obstacles known to the planner at iteration `it`.
    pub fn obstacles_at(&self, it: usize) -> Vec<Obstacle> {
        let mut out = self.obstacles.clone();
        out.extend(self.script.iter().filter(|s| s.before_iteration <= it).map(|s| s.obstacle.clone()));
        out
    }
}

fn scenario_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Scenario { path: path.into(), message: message.into() }
}

fn zonotope(spec: &ZonotopeSpec, path: &str) -> Result<Zonotope> {
    if spec.center.len() != 3 || spec.generators.iter().any(|g| g.len() != 3) {
        return Err(scenario_err(path, "zonotope center and generators must be 3-vectors"));
    }
    if spec.center.iter().chain(spec.generators.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(scenario_err(path, "zonotope entries must be finite"));
    }
    Zonotope::new(spec.center.clone(), spec.generators.clone()).map_err(|e| scenario_err(path, e.to_string()))
}

fn interval(iv: [f64; 2], path: &str) -> Result<Interval> {
    if !iv[0].is_finite() || !iv[1].is_finite() {
        return Err(scenario_err(path, "interval bounds must be finite"));
    }
    Interval::new(iv[0], iv[1]).map_err(|_| scenario_err(path, format!("interval [{}, {}] has lo > hi", iv[0], iv[1])))
}

fn inertia_matrix(v: &[f64; 6]) -> Matrix3<f64> {
    Matrix3::new(v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2])
}

impl ScenarioFile {
    /// Decodes the document; errors name the JSON path and the line/column.
    pub fn from_json_str(text: &str) -> Result<ScenarioFile> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = match e.path().to_string() {
                p if p == "?" || p == "." => "document".to_string(),
                p => p,
            };
            let inner = e.into_inner();
            scenario_err(path, format!("{inner}"))
        })?;
        if file.version != SCENARIO_VERSION {
            return Err(scenario_err("version", format!("unsupported version {} (expected {SCENARIO_VERSION})", file.version)));
        }
        Ok(file)
    }

    pub fn into_scenario(self) -> Result<Scenario> {
        let joints = self
            .robot
            .joints
            .iter()
            .enumerate()
            .map(|(i, j)| {
                let path = format!("robot.joints[{i}]");
                let offset = Vector3::from(j.offset);
                let rotation = j.rotation.map_or(Matrix3::identity(), |r| {
                    Matrix3::new(r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2])
                });
                match j.kind {
                    JointType::Revolute => {
                        let axis = j.axis.ok_or_else(|| scenario_err(&path, "revolute joint needs an axis"))?;
                        let mut jm = JointModel::revolute(Vector3::from(axis), offset);
                        jm.rotation = rotation;
                        Ok(jm)
                    }
                    JointType::Fixed => {
                        if j.axis.is_some() {
                            return Err(scenario_err(&path, "fixed joint must not declare an axis"));
                        }
                        Ok(JointModel::fixed(offset, rotation))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let links = self
            .robot
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let path = format!("robot.links[{i}]");
                let nominal = InertialParams { mass: l.mass, com: Vector3::from(l.com), inertia: inertia_matrix(&l.inertia) };
                let bounds = match (&l.uncertainty, &l.bounds) {
                    (Some(_), Some(_)) => return Err(scenario_err(&path, "give either uncertainty or bounds, not both")),
                    (Some(f), None) if !(*f >= 0.0 && *f < 1.0) => {
                        return Err(scenario_err(format!("{path}.uncertainty"), "must lie in [0, 1)"))
                    }
                    (Some(f), None) => InertialBounds::relative(&nominal, *f),
                    (None, None) => InertialBounds::point(&nominal),
                    (None, Some(b)) => InertialBounds {
                        mass: interval(b.mass, &format!("{path}.bounds.mass"))?,
                        com: [0, 1, 2]
                            .map(|k| interval(b.com[k], &format!("{path}.bounds.com[{k}]")))
                            .into_iter()
                            .collect::<Result<Vec<_>>>()?
                            .try_into()
                            .expect("3 entries"),
                        inertia: [0, 1, 2, 3, 4, 5]
                            .map(|k| interval(b.inertia[k], &format!("{path}.bounds.inertia[{k}]")))
                            .into_iter()
                            .collect::<Result<Vec<_>>>()?
                            .try_into()
                            .expect("6 entries"),
                    },
                };
                if !bounds.contains(&nominal) {
                    return Err(scenario_err(&path, "nominal parameters lie outside their bounds"));
                }
                Ok(LinkModel { volume: zonotope(&l.volume, &format!("{path}.volume"))?, nominal, bounds })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = ExtendedArmModel::new(joints, links).map_err(|e| scenario_err("robot", e.to_string()))?;
        let n = model.n_q();

        let limits = match &self.robot.joint_limits {
            None => vec![Interval { lo: -std::f64::consts::PI, hi: std::f64::consts::PI }; n],
            Some(l) if l.len() != n => {
                return Err(scenario_err("robot.joint_limits", format!("{} limits for {n} joints", l.len())))
            }
            Some(l) => l
                .iter()
                .enumerate()
                .map(|(i, iv)| interval(*iv, &format!("robot.joint_limits[{i}]")))
                .collect::<Result<Vec<_>>>()?,
        };
        for (name, q) in [("start", &self.start), ("goal", &self.goal)] {
            if q.len() != n {
                return Err(scenario_err(name, format!("{} entries for {n} joints", q.len())));
            }
            if let Some(j) = (0..n).find(|&j| !limits[j].contains(q[j])) {
                return Err(scenario_err(format!("{name}[{j}]"), format!("{} outside joint limits", q[j])));
            }
        }

        let mu = interval(self.contact.mu.interval(), "contact.mu")?;
        let radius = interval(self.contact.radius.interval(), "contact.radius")?;
        let contact = ContactModel { mu: mu.lo, radius: radius.lo, normal: Vector3::from(self.contact.normal) };
        contact.validate().map_err(|e| scenario_err("contact", e.to_string()))?;

        let obstacle = |spec: &ZonotopeSpec, path: String| -> Result<Obstacle> {
            Obstacle::new(zonotope(spec, &path)?).map_err(|e| scenario_err(path, e.to_string()))
        };
        let obstacles =
            self.obstacles.iter().enumerate().map(|(i, o)| obstacle(o, format!("obstacles[{i}]"))).collect::<Result<Vec<_>>>()?;
        let script = self
            .script
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(ScriptedObstacle {
                    before_iteration: s.before_iteration,
                    obstacle: obstacle(&s.obstacle, format!("script[{i}].obstacle"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let p = &self.partition;
        let partition = TimePartition::new(p.dt, p.t_p, p.t_fin).map_err(|e| scenario_err("partition", e.to_string()))?;
        let eta1 = self.trajectory.eta1.expand(n, "eta1").map_err(|m| scenario_err("trajectory.eta1", m))?;
        if eta1.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(scenario_err("trajectory.eta1", "entries must be finite and nonnegative"));
        }
        if !(self.trajectory.hlp_step > 0.0) {
            return Err(scenario_err("trajectory.hlp_step", "must be positive"));
        }
        if !(self.trajectory.goal_tolerance > 0.0) {
            return Err(scenario_err("trajectory.goal_tolerance", "must be positive"));
        }

        let c = &self.controller;
        let k_r = c.k_r.expand(n, "k_r").map_err(|m| scenario_err("controller.k_r", m))?;
        let need_estimate = matches!(c.sigma_m, EigenSpec::Keyword(_)) || matches!(c.sigma_big_m, EigenSpec::Keyword(_));
        let estimate = if need_estimate {
            if c.eig_samples == 0 {
                return Err(scenario_err("controller.eig_samples", "must be positive to estimate eigenvalue bounds"));
            }
            Some(
                estimate_mass_eigenvalues(&model, c.eig_samples, self.solver.seed)
                    .map_err(|e| scenario_err("controller", e.to_string()))?,
            )
        } else {
            None
        };
        let pick = |spec: &EigenSpec, lower: bool| match (spec, &estimate) {
            (EigenSpec::Value(v), _) => *v,
            (EigenSpec::Keyword(_), Some(e)) => {
                if lower {
                    e.sigma_min
                } else {
                    e.sigma_max
                }
            }
            (EigenSpec::Keyword(_), None) => unreachable!("estimate computed when requested"),
        };
        let controller = ControllerConfig {
            k_r,
            v_m: c.v_m,
            alpha_c: c.alpha_c,
            sigma_m: pick(&c.sigma_m, true),
            sigma_big_m: pick(&c.sigma_big_m, false),
        };
        controller.validate().map_err(|e| scenario_err("controller", e.to_string()))?;
        let eigen = EigenProvenance {
            sigma_m_estimated: matches!(c.sigma_m, EigenSpec::Keyword(_)),
            sigma_big_m_estimated: matches!(c.sigma_big_m, EigenSpec::Keyword(_)),
            samples: estimate.map_or(0, |e| e.samples),
        };

        self.solver.validate().map_err(|e| scenario_err("solver", e.to_string()))?;
        if self.pz.max_terms == 0 {
            return Err(scenario_err("pz.max_terms", "must be positive"));
        }

        Ok(Scenario {
            name: self.name,
            model,
            contact,
            obstacles,
            script,
            joint_limits: limits,
            q_start: self.start,
            q_goal: self.goal,
            partition,
            eta1,
            hlp_step: self.trajectory.hlp_step,
            goal_tolerance: self.trajectory.goal_tolerance,
            controller,
            eigen,
            solver: self.solver,
            verify_samples: self.verify.samples,
            pz: self.pz,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Three-joint arm carrying a tray, used across the planner tests.
    pub(crate) const DESK: &str = r#"{
      "version": 1,
      "name": "unit-desk",
      "robot": {
        "joints": [
          {"type": "revolute", "axis": [0, 0, 1], "offset": [0, 0, 0.1]},
          {"type": "revolute", "axis": [0, 1, 0], "offset": [0, 0, 0.2]},
          {"type": "revolute", "axis": [0, 1, 0], "offset": [0.3, 0, 0]},
          {"type": "fixed", "offset": [0.25, 0, 0.02]}
        ],
        "links": [
          {"volume": {"center": [0, 0, 0.1], "generators": [[0.03,0,0],[0,0.03,0],[0,0,0.1]]},
           "mass": 1.0, "com": [0, 0, 0.1], "inertia": [0.004, 0.004, 0.001, 0, 0, 0], "uncertainty": 0.05},
          {"volume": {"center": [0.15, 0, 0], "generators": [[0.15,0,0],[0,0.02,0],[0,0,0.02]]},
           "mass": 0.8, "com": [0.15, 0, 0], "inertia": [0.0002, 0.006, 0.006, 0, 0, 0], "uncertainty": 0.05},
          {"volume": {"center": [0.15, 0, 0], "generators": [[0.15,0,0],[0,0.06,0],[0,0,0.01]]},
           "mass": 0.5, "com": [0.15, 0, 0], "inertia": [0.0006, 0.004, 0.004, 0, 0, 0], "uncertainty": 0.05},
          {"volume": {"center": [0, 0, 0.04], "generators": [[0.025,0,0],[0,0.025,0],[0,0,0.04]]},
           "mass": 0.172, "com": [0, 0, 0.04], "inertia": [0.0001, 0.0001, 0.00005, 0, 0, 0],
           "bounds": {"mass": [0.17, 0.175], "com": [[0,0],[0,0],[0.04,0.04]],
                      "inertia": [[0.0001,0.0001],[0.0001,0.0001],[0.00005,0.00005],[0,0],[0,0],[0,0]]}}
        ]
      },
      "contact": {"mu": [0.36, 0.4], "radius": 0.03},
      "start": [0.0, 0.3, -0.3],
      "goal": [0.2, 0.3, -0.3],
      "partition": {"dt": 0.1, "t_p": 1.0, "t_fin": 2.0},
      "controller": {"k_r": 4.0, "v_m": 5e-7, "sigma_m": "estimate", "eig_samples": 200}
    }"#;

    pub(crate) fn desk() -> Scenario {
        Scenario::from_json_str(DESK).unwrap()
    }

    #[test]
    fn desk_scenario_parses() {
        let s = desk();
        assert_eq!(s.n_q(), 3);
        assert_eq!(s.contact.mu, 0.36);
        assert!(s.eigen.sigma_m_estimated && s.eigen.samples == 200);
        assert!(s.controller.sigma_m > 0.0 && s.controller.sigma_m <= s.controller.sigma_big_m);
        assert_eq!(s.partition.n_t, 20);
        assert_eq!(s.eta1, vec![DEFAULT_ETA1; 3]);
    }

    #[test]
    fn errors_name_the_path() {
        let bad = DESK.replace(r#""mu": [0.36, 0.4]"#, r#""mu": "slippery""#);
        match Scenario::from_json_str(&bad) {
            Err(Error::Scenario { path, .. }) => assert!(path.contains("contact.mu"), "{path}"),
            other => panic!("{other:?}"),
        }
        let bad = DESK.replace(r#""start": [0.0, 0.3, -0.3]"#, r#""start": [0.0, 0.3, -4.0]"#);
        match Scenario::from_json_str(&bad) {
            Err(Error::Scenario { path, .. }) => assert_eq!(path, "start[2]"),
            other => panic!("{other:?}"),
        }
        let bad = DESK.replace(r#""mass": [0.17, 0.175]"#, r#""mass": [0.18, 0.175]"#);
        assert!(matches!(Scenario::from_json_str(&bad), Err(Error::Scenario { .. })));
        let bad = DESK.replace(r#""version": 1"#, r#""version": 7"#);
        assert!(matches!(Scenario::from_json_str(&bad), Err(Error::Scenario { .. })));
        let bad = DESK.replace(r#""dt": 0.1"#, r#""dt": 0.3"#);
        assert!(matches!(Scenario::from_json_str(&bad), Err(Error::Scenario { .. })));
        let bad = DESK.replace(r#""name""#, r#""nmae""#);
        assert!(matches!(Scenario::from_json_str(&bad), Err(Error::Scenario { .. })));
    }

    #[test]
    fn syntax_errors_report_line() {
        let bad = DESK.replacen('}', "", 1);
        let msg = Scenario::from_json_str(&bad).unwrap_err().to_string();
        assert!(msg.contains("line"), "{msg}");
    }
}
