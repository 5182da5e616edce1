use super::MIN_JOINTS;
use crate::error::{Error, Result};
use crate::events::{EventLabel, EventSpan};
use crate::geom::{Aabb, Vec3};
use serde::{Deserialize, Serialize};

/// Objects rest on eight wall slots; two stay free for relocations.
pub const MAX_OBJECTS: usize = 6;
/// Shortest event that can host a false-belief episode.
pub const MIN_FALSE_BELIEF_FRAMES: usize = 60;

fn default_joints() -> usize {
    MIN_JOINTS
}

fn default_frame_rate() -> f64 {
    25.0
}

fn default_min_segment() -> usize {
    10
}

fn default_room() -> Aabb {
    ScenarioSpec::default_room()
}

/// A scripted episode, usually loaded from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub object_count: usize,
    #[serde(default = "default_joints")]
    pub joints: usize,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    #[serde(default = "default_min_segment")]
    pub min_segment: usize,
    #[serde(default = "default_room")]
    pub room: Aabb,
    pub events: Vec<ScriptedEvent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedEvent {
    pub kind: EventLabel,
    pub duration: usize,
    /// Object ids involved; empty lets the simulator choose.
    #[serde(default)]
    pub objects: Vec<u32>,
    /// 1 for a first-order false belief, 2 for a second-order one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub false_belief: Option<u8>,
    /// Agent (1 or 2) that leads attention or moves the object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader: Option<u8>,
    /// Optional explicit start frame; must match the running total.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
}

impl ScenarioSpec {
    pub fn default_room() -> Aabb {
        Aabb::new(Vec3::ZERO, Vec3::new(4.0, 3.5, 3.0))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn total_frames(&self) -> usize {
        self.events.iter().map(|e| e.duration).sum()
    }

    pub fn spans(&self) -> Vec<EventSpan> {
        let mut t = 0;
        self.events
            .iter()
            .map(|e| {
                let s = EventSpan {
                    label: e.kind,
                    start: t,
                    end: t + e.duration,
                };
                t += e.duration;
                s
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Scenario(m));
        if self.object_count > MAX_OBJECTS {
            return err(format!(
                "object_count {} exceeds the maximum of {MAX_OBJECTS}",
                self.object_count
            ));
        }
        if self.joints < MIN_JOINTS {
            return err(format!("joints must be at least {MIN_JOINTS}"));
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return err("frame_rate must be positive".into());
        }
        if self.min_segment < 2 {
            return err("min_segment must be at least 2".into());
        }
        let r = &self.room;
        if !r.is_valid()
            || r.max.x - r.min.x < 3.0
            || r.max.y - r.min.y < 2.5
            || r.max.z - r.min.z < 2.2
        {
            return err("room must be at least 3 x 2.5 x 2.2 m".into());
        }
        if self.events.is_empty() {
            return err("scenario has no events".into());
        }
        let mut t = 0usize;
        for (i, e) in self.events.iter().enumerate() {
            if e.duration == 0 {
                return err(format!("event {i} has zero duration"));
            }
            if e.duration < self.min_segment {
                return err(format!(
                    "event {i} lasts {} frames, shorter than min_segment {}",
                    e.duration, self.min_segment
                ));
            }
            if let Some(s) = e.start {
                if s < t {
                    return err(format!("event {i} starting at {s} overlaps the previous one"));
                }
                if s > t {
                    return err(format!("gap before event {i}: expected start {t}, got {s}"));
                }
            }
            if let Some(&o) = e.objects.iter().find(|&&o| o as usize >= self.object_count) {
                return err(format!("event {i} references unknown object {o}"));
            }
            if e.objects.len() > 2 || (e.objects.len() == 2 && e.objects[0] == e.objects[1]) {
                return err(format!("event {i} must name at most two distinct objects"));
            }
            if let Some(l) = e.leader {
                if l != 1 && l != 2 {
                    return err(format!("event {i}: leader must be 1 or 2"));
                }
            }
            if e.kind != EventLabel::NoCommunication && self.object_count == 0 {
                return err(format!("event {i} needs at least one object"));
            }
            if e.kind != EventLabel::NoCommunication && e.objects.len() > 1 {
                return err(format!("event {i}: shared attention takes a single object"));
            }
            if let Some(order) = e.false_belief {
                if order != 1 && order != 2 {
                    return err(format!("event {i}: false_belief must be 1 or 2"));
                }
                if e.kind != EventLabel::NoCommunication {
                    return err(format!("event {i}: false beliefs need a NoCommunication event"));
                }
                if e.objects.len() != 1 {
                    return err(format!("event {i}: false beliefs need exactly one object"));
                }
                if e.duration < MIN_FALSE_BELIEF_FRAMES {
                    return err(format!(
                        "event {i}: false beliefs need at least {MIN_FALSE_BELIEF_FRAMES} frames"
                    ));
                }
            }
            t += e.duration;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"
seed = 7
object_count = 3

[[events]]
kind = "JointAttention"
duration = 40
objects = [1]

[[events]]
kind = "NoCommunication"
duration = 80
objects = [0]
false_belief = 1
"#;

    #[test]
    fn parses_and_defaults() {
        let s = ScenarioSpec::from_toml(DEMO).unwrap();
        assert_eq!(s.joints, 6);
        assert_eq!(s.min_segment, 10);
        assert_eq!(s.total_frames(), 120);
        assert_eq!(s.spans()[1].start, 40);
        let again = ScenarioSpec::from_toml(&s.to_toml()).unwrap();
        assert_eq!(again, s);
    }

    fn with(f: impl FnOnce(&mut ScenarioSpec)) -> Result<()> {
        let mut s = ScenarioSpec::from_toml(DEMO).unwrap();
        f(&mut s);
        s.validate()
    }

    #[test]
    fn rejects_bad_scripts() {
        assert!(with(|s| s.events[0].duration = 0).is_err());
        assert!(with(|s| s.events[0].duration = 5).is_err());
        assert!(with(|s| s.events[1].start = Some(30)).is_err());
        assert!(with(|s| s.events[1].start = Some(50)).is_err());
        assert!(with(|s| s.events[1].start = Some(40)).is_ok());
        assert!(with(|s| s.events[0].objects = vec![9]).is_err());
        assert!(with(|s| s.events[1].duration = 30).is_err());
        assert!(with(|s| s.events[1].kind = EventLabel::JointAttention).is_err());
        assert!(with(|s| s.object_count = 9).is_err());
        assert!(with(|s| s.events.clear()).is_err());
        assert!(with(|s| s.events[0].leader = Some(3)).is_err());
        assert!(ScenarioSpec::from_toml("seed = 1\nobject_count = 1\nevents = []\nbogus = 2").is_err());
    }
}
