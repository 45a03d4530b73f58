//! Trajectory quality metrics and their aggregation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{distance_field, snap};
use crate::trajectory::Trajectory;
use crate::world::{GridWorld, Pose, ROBOT_RADIUS_M};

/// True iff every waypoint lies on a traversable cell. Off-grid points fail.
pub fn binary_traversability(world: &GridWorld, waypoints: &[[f64; 2]]) -> bool {
    waypoints.iter().all(|&w| world.is_free_at(w))
}

/// Mean clearance over waypoints, clipped to the robot radius and divided by
/// it, so the result lies in `[0, 1]`. Uses the clearance of the cell that
/// contains each waypoint; off-grid points score 0.
pub fn clearance_traversability(world: &GridWorld, waypoints: &[[f64; 2]]) -> f64 {
    if waypoints.is_empty() {
        return 0.0;
    }
    let s: f64 = waypoints
        .iter()
        .map(|&w| world.clearance_at_point(w).min(ROBOT_RADIUS_M) / ROBOT_RADIUS_M)
        .sum();
    s / waypoints.len() as f64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioVariant {
    /// `(h_c - h_t + |tau|) / (2 |tau|)` clamped to `[0, 1]`: 1 for full
    /// progress toward the goal, 0.5 for none, 0 for full regress.
    #[default]
    Signed,
    /// `1 - |h_t - h_c| / (2 |tau|)`, symmetric in progress and regress.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceRatio {
    pub signed: f64,
    pub literal: f64,
    /// The signed value fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

impl DistanceRatio {
    pub fn get(&self, v: RatioVariant) -> f64 {
        match v {
            RatioVariant::Signed => self.signed,
            RatioVariant::Literal => self.literal,
        }
    }
}

/// Both ratio variants from the travel distance at the start (`h_c`), at the
/// trajectory's end (`h_t`) and the trajectory length.
pub fn distance_ratio_from(h_c: f64, h_t: f64, length: f64) -> Result<DistanceRatio> {
    if !(length > 0.0) || !h_c.is_finite() || !h_t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "distance ratio needs finite travel distances and a positive length (h_c {h_c}, h_t {h_t}, |tau| {length})"
        )));
    }
    let raw = (h_c - h_t + length) / (2.0 * length);
    Ok(DistanceRatio {
        signed: raw.clamp(0.0, 1.0),
        literal: 1.0 - (h_t - h_c).abs() / (2.0 * length),
        clamped: !(0.0..=1.0).contains(&raw),
    })
}

/// Travel distances to one goal from anywhere in a world, answered from a
/// single Dijkstra sweep seeded at the goal.
#[derive(Clone, Debug)]
pub struct GoalDistances<'a> {
    world: &'a GridWorld,
    field: Vec<f64>,
}

impl<'a> GoalDistances<'a> {
    pub fn new(world: &'a GridWorld, goal: [f64; 2]) -> Result<Self> {
        let g = snap(world, goal)?;
        Ok(Self {
            world,
            field: distance_field(world, g, f64::INFINITY)?,
        })
    }

    /// Distance from `p` after snapping; `None` if `p` cannot be snapped or
    /// cannot reach the goal.
    pub fn at(&self, p: [f64; 2]) -> Option<f64> {
        let c = snap(self.world, p).ok()?;
        let d = self.field[self.world.index(c)];
        d.is_finite().then_some(d)
    }
}

/// Distance ratio of a robot-frame trajectory started at `start`. `None`
/// when the start or the final waypoint has no travel distance.
pub fn distance_ratio(goal: &GoalDistances<'_>, traj: &Trajectory, start: &Pose) -> Option<DistanceRatio> {
    let end = *traj.world_waypoints(start).last()?;
    let h_c = goal.at(start.xy())?;
    let h_t = goal.at(end)?;
    distance_ratio_from(h_c, h_t, traj.arc_length()).ok()
}

/// Per-scenario evaluation result.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub scenario: usize,
    pub binary_traversable: bool,
    pub clearance_score: f64,
    /// `None` when the scenario was excluded (no travel distance).
    pub ratio: Option<DistanceRatio>,
    /// Wall-clock seconds to encode and sample, when measured.
    pub inference_time: Option<f64>,
}

pub fn evaluate_trajectory(
    scenario: usize,
    world: &GridWorld,
    goal: &GoalDistances<'_>,
    traj: &Trajectory,
    start: &Pose,
) -> EvalRecord {
    let wps = traj.world_waypoints(start);
    EvalRecord {
        scenario,
        binary_traversable: binary_traversability(world, &wps),
        clearance_score: clearance_traversability(world, &wps),
        ratio: distance_ratio(goal, traj, start),
        inference_time: None,
    }
}

pub const RECORDS_HEADER: &str =
    "scenario,binary_traversable,clearance_score,distance_ratio_signed,distance_ratio_literal,ratio_clamped,excluded,inference_time";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_records_csv(records: &[EvalRecord], w: &mut impl Write) -> Result<()> {
    writeln!(w, "{RECORDS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.binary_traversable as u8,
            r.clearance_score,
            opt(r.ratio.map(|x| x.signed)),
            opt(r.ratio.map(|x| x.literal)),
            r.ratio.is_some_and(|x| x.clamped) as u8,
            r.ratio.is_none() as u8,
            opt(r.inference_time),
        )?;
    }
    Ok(())
}

pub fn read_records_csv(text: &str) -> Result<Vec<EvalRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(RECORDS_HEADER) {
        return Err(Error::Format {
            kind: "results",
            detail: "unexpected header".into(),
        });
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let bad = || Error::Format {
                kind: "results",
                detail: format!("bad row {l:?}"),
            };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let optnum = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            let ratio = if f[6] == "1" {
                None
            } else {
                Some(DistanceRatio {
                    signed: num(f[3])?,
                    literal: num(f[4])?,
                    clamped: f[5] == "1",
                })
            };
            Ok(EvalRecord {
                scenario: f[0].parse().map_err(|_| bad())?,
                binary_traversable: f[1] == "1",
                clearance_score: num(f[2])?,
                ratio,
                inference_time: optnum(f[7])?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            std,
            count: values.len(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub records: usize,
    pub binary: Stat,
    pub clearance: Stat,
    pub ratio_signed: Option<Stat>,
    pub ratio_literal: Option<Stat>,
    pub excluded: usize,
    pub clamped: usize,
    pub inference_time: Option<Stat>,
}

pub fn aggregate(records: &[EvalRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Empty("evaluation records"));
    }
    let bin: Vec<f64> = records.iter().map(|r| r.binary_traversable as u8 as f64).collect();
    let clr: Vec<f64> = records.iter().map(|r| r.clearance_score).collect();
    let ratios: Vec<DistanceRatio> = records.iter().filter_map(|r| r.ratio).collect();
    let signed: Vec<f64> = ratios.iter().map(|r| r.signed).collect();
    let literal: Vec<f64> = ratios.iter().map(|r| r.literal).collect();
    let times: Vec<f64> = records.iter().filter_map(|r| r.inference_time).collect();
    Ok(Summary {
        records: records.len(),
        binary: Stat::of(&bin).expect("non-empty"),
        clearance: Stat::of(&clr).expect("non-empty"),
        ratio_signed: Stat::of(&signed),
        ratio_literal: Stat::of(&literal),
        excluded: records.len() - ratios.len(),
        clamped: ratios.iter().filter(|r| r.clamped).count(),
        inference_time: Stat::of(&times),
    })
}

impl Summary {
    fn rows(&self) -> Vec<(&'static str, Option<Stat>)> {
        vec![
            ("traversability_binary", Some(self.binary)),
            ("traversability_clearance", Some(self.clearance)),
            ("distance_ratio_signed", self.ratio_signed),
            ("distance_ratio_literal", self.ratio_literal),
            ("inference_time_s", self.inference_time),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,mean,std,count,excluded,clamped\n");
        for (name, st) in self.rows() {
            let (ex, cl) = if name.starts_with("distance_ratio") {
                (self.excluded, self.clamped)
            } else {
                (0, 0)
            };
            match st {
                Some(st) => s.push_str(&format!("{name},{},{},{},{ex},{cl}\n", st.mean, st.std, st.count)),
                None => s.push_str(&format!("{name},,,0,{ex},{cl}\n")),
            }
        }
        s
    }

    /// Aligned table with rates shown as percentages.
    pub fn to_text(&self) -> String {
        let mut s = format!("{:<28}{:>10}{:>10}{:>8}\n", "metric", "mean", "std", "n");
        for (name, st) in self.rows() {
            let pct = !name.starts_with("inference");
            match st {
                Some(st) if pct => s.push_str(&format!(
                    "{:<28}{:>9.2}%{:>9.2}%{:>8}\n",
                    name,
                    100.0 * st.mean,
                    100.0 * st.std,
                    st.count
                )),
                Some(st) => s.push_str(&format!(
                    "{:<28}{:>10.4}{:>10.4}{:>8}\n",
                    name, st.mean, st.std, st.count
                )),
                None => s.push_str(&format!("{:<28}{:>10}{:>10}{:>8}\n", name, "-", "-", 0)),
            }
        }
        s.push_str(&format!(
            "records {}, excluded from distance ratio {}, clamped {}\n",
            self.records, self.excluded, self.clamped
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor() -> GridWorld {
        GridWorld::from_ascii(
            1.0,
            &["##########", "..........", "..........", "..........", "##########"],
        )
        .unwrap()
    }

    #[test]
    fn binary_is_a_conjunction() {
        let w = corridor();
        assert!(binary_traversability(&w, &[[0.5, 2.5], [9.5, 1.5]]));
        assert!(!binary_traversability(&w, &[[0.5, 2.5], [3.5, 4.5]]));
        assert!(!binary_traversability(&w, &[[0.5, 2.5], [10.5, 2.5]]));
    }

    #[test]
    fn clearance_extremes() {
        let w = corridor();
        assert_eq!(clearance_traversability(&w, &[[2.5, 2.5], [5.5, 2.5]]), 1.0);
        assert_eq!(clearance_traversability(&w, &[[2.5, 0.5], [5.5, 4.5]]), 0.0);
    }

    #[test]
    fn ratio_plug_in_values() {
        let r = distance_ratio_from(20.0, 20.0, 15.0).unwrap();
        assert_eq!((r.signed, r.literal), (0.5, 1.0));
        let r = distance_ratio_from(20.0, 5.0, 15.0).unwrap();
        assert_eq!(r.signed, 1.0);
        let r = distance_ratio_from(20.0, 35.0, 15.0).unwrap();
        assert_eq!(r.signed, 0.0);
        let r = distance_ratio_from(20.0, 0.0, 15.0).unwrap();
        assert!(r.clamped && r.signed == 1.0);
        assert!(distance_ratio_from(20.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn straight_run_toward_goal_is_full_progress() {
        let w = GridWorld::from_traversable(0.5, 120, 20, vec![true; 2400]).unwrap();
        let start = Pose::new(5.25, 5.25, 0.0);
        let g = GoalDistances::new(&w, [55.25, 5.25]).unwrap();
        let traj = Trajectory::from_increments(vec![[1.0, 0.0]; 15]).unwrap();
        let r = distance_ratio(&g, &traj, &start).unwrap();
        assert_eq!(r.signed, 1.0);
        assert_eq!(r.literal, 0.5);
    }

    #[test]
    fn aggregate_and_csv_round_trip() {
        let recs = vec![
            EvalRecord {
                scenario: 0,
                binary_traversable: true,
                clearance_score: 1.0,
                ratio: Some(distance_ratio_from(10.0, 4.0, 6.0).unwrap()),
                inference_time: None,
            },
            EvalRecord {
                scenario: 1,
                binary_traversable: false,
                clearance_score: 0.25,
                ratio: None,
                inference_time: None,
            },
        ];
        let s = aggregate(&recs).unwrap();
        assert_eq!(s.binary.mean, 0.5);
        assert_eq!(s.excluded, 1);
        assert_eq!(s.ratio_signed.unwrap().count, 1);
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        assert_eq!(read_records_csv(std::str::from_utf8(&buf).unwrap()).unwrap(), recs);
        assert!(aggregate(&[]).is_err());
        assert!(s.to_text().contains("50.00%"));
        assert!(s.to_csv().starts_with("metric,mean,std,count"));
    }
}
