use super::scenario::ScenarioSpec;
use super::truth::{derive_ground_truth_beliefs, GroundTruth};
use super::{AgentState, Category, Frame, ObjectState, WorldTrace, JOINT_HEAD, JOINT_LEFT_FOOT};
use super::{JOINT_LEFT_HAND, JOINT_RIGHT_FOOT, JOINT_RIGHT_HAND, JOINT_TORSO};
use crate::error::Result;
use crate::events::EventLabel;
use crate::features::Perception;
use crate::geom::{round_sig, Aabb, Vec3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const EYE_HEIGHT: f64 = 1.6;
const TORSO_HEIGHT: f64 = 1.1;
const SHOULDER_HEIGHT: f64 = 1.4;
const SHELF_HEIGHT: f64 = 1.0;
/// Idle gaze is pitched this far upward so that it rests on no entity.
const IDLE_PITCH_DEG: f64 = 35.0;
const GAZE_NOISE_DEG: f64 = 1.5;
const SWAY: f64 = 0.01;
const CHUNK_FRAMES: (usize, usize) = (15, 35);
const TRACE_DIGITS: usize = 9;

/// Fixed room furniture: agent homes, shelf slots, the bag and the door.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub room: Aabb,
    pub homes: [Vec3; 2],
    pub slots: Vec<Vec3>,
    pub bag: Aabb,
    pub exit: Vec3,
}

impl Layout {
    pub fn new(room: &Aabb) -> Self {
        let w = room.max.x - room.min.x;
        let h = room.max.y - room.min.y;
        let mid_y = room.min.y + 0.5 * h;
        let homes = [
            Vec3::new(room.min.x + 0.25 * w, mid_y, room.min.z),
            Vec3::new(room.min.x + 0.75 * w, mid_y, room.min.z),
        ];
        let mut slots = Vec::new();
        for f in [0.2, 0.4, 0.6, 0.8] {
            let x = room.min.x + f * w;
            slots.push(Vec3::new(x, room.min.y + 0.05, room.min.z + SHELF_HEIGHT));
            slots.push(Vec3::new(x, room.max.y - 0.05, room.min.z + SHELF_HEIGHT));
        }
        let c = Vec3::new(room.min.x + 0.5 * w, room.min.y + 0.3, room.min.z + 0.2);
        let half = Vec3::new(0.2, 0.15, 0.2);
        Layout {
            room: *room,
            homes,
            slots,
            bag: Aabb::new(c - half, c + half),
            exit: Vec3::new(room.min.x - 1.0, mid_y, room.min.z),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Look {
    Idle(f64),
    Away(f64),
    Agent,
    Object(u32),
    Place(Vec3),
}

#[derive(Clone, Copy, Debug)]
struct Plan {
    body: Vec3,
    look: Look,
    point: Option<u32>,
    carry: Option<u32>,
    walking: bool,
}

struct Sim<'a> {
    rng: ChaCha8Rng,
    layout: Layout,
    spec: &'a ScenarioSpec,
    plans: [Vec<Plan>; 2],
    event_objects: Vec<Vec<Vec3>>,
    all_objects: Vec<Vec<Vec3>>,
    cur: Vec<Vec3>,
    slot_of: Vec<Option<usize>>,
}

/// Simulates a scripted scenario; the result is deterministic in the seed.
pub fn simulate(spec: &ScenarioSpec) -> Result<(WorldTrace, GroundTruth)> {
    spec.validate()?;
    let trace = simulate_trace(spec);
    let gt = derive_ground_truth_beliefs(&trace, &spec.spans(), &Perception::default())?;
    Ok((trace, gt))
}

fn simulate_trace(spec: &ScenarioSpec) -> WorldTrace {
    let layout = Layout::new(&spec.room);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..layout.slots.len()).collect();
    order.shuffle(&mut rng);
    let slot_of: Vec<Option<usize>> = order[..spec.object_count].iter().map(|&s| Some(s)).collect();
    let cur = slot_of.iter().map(|s| layout.slots[s.unwrap()]).collect();
    let categories: Vec<Category> = (0..spec.object_count)
        .map(|_| Category::new(rng.gen_range(0..Category::NAMES.len() as u8)).unwrap())
        .collect();
    let mut sim = Sim {
        rng,
        layout,
        spec,
        plans: [Vec::new(), Vec::new()],
        event_objects: Vec::new(),
        all_objects: Vec::new(),
        cur,
        slot_of,
    };
    let mut start = 0;
    for ev in &spec.events {
        sim.script_event(ev, start);
        start += ev.duration;
    }
    sim.render(&categories)
}

impl Sim<'_> {
    fn frac(start: usize, dur: usize, pct: usize) -> usize {
        start + dur * pct / 100
    }

    fn idle_yaw(&mut self) -> f64 {
        self.rng.gen_range(0.0..2.0 * PI)
    }

    fn visible_objects(&self) -> Vec<u32> {
        (0..self.cur.len() as u32)
            .filter(|&o| self.slot_of[o as usize].is_some())
            .collect()
    }

    fn free_slot(&mut self) -> Option<usize> {
        let taken: Vec<usize> = self.slot_of.iter().flatten().copied().collect();
        let free: Vec<usize> = (0..self.layout.slots.len())
            .filter(|s| !taken.contains(s))
            .collect();
        free.choose(&mut self.rng).copied()
    }

    fn pick_object(&mut self, scripted: &[u32]) -> u32 {
        if let Some(&o) = scripted.first() {
            return o;
        }
        let vis = self.visible_objects();
        match vis.choose(&mut self.rng) {
            Some(&o) => o,
            None => self.rng.gen_range(0..self.cur.len() as u32),
        }
    }

    fn home_plan(&self, agent: usize, look: Look) -> Plan {
        Plan {
            body: self.layout.homes[agent],
            look,
            point: None,
            carry: None,
            walking: false,
        }
    }

    /// Linear relocation of `obj` over frames `[a, b)`; lands at `b - 1`.
    fn relocate(&mut self, obj: u32, to: Vec3, a: usize, b: usize, start: usize) {
        let from = self.cur[obj as usize];
        let n = (b - a).max(1) as f64;
        for t in a..b {
            let k = (t - a + 1) as f64 / n;
            self.event_objects[t - start][obj as usize] = from.lerp(to, k);
        }
        for t in b..self.event_objects.len() + start {
            self.event_objects[t - start][obj as usize] = to;
        }
        self.cur[obj as usize] = to;
    }

    fn script_event(&mut self, ev: &super::ScriptedEvent, start: usize) {
        let d = ev.duration;
        let end = start + d;
        let leader = match ev.leader {
            Some(l) => (l - 1) as usize,
            None if ev.false_belief.is_some() => 1,
            None => self.rng.gen_range(0..2),
        };
        let follower = 1 - leader;
        let mut plans = [
            vec![self.home_plan(0, Look::Idle(0.0)); d],
            vec![self.home_plan(1, Look::Idle(0.0)); d],
        ];
        self.event_objects = vec![self.cur.clone(); d];
        let p = |pct| Self::frac(start, d, pct);
        let set = |plans: &mut [Vec<Plan>; 2], agent: usize, a: usize, b: usize, f: &dyn Fn(&mut Plan)| {
            for plan in &mut plans[agent][a - start..b - start] {
                f(plan);
            }
        };
        match ev.kind {
            EventLabel::NoCommunication if ev.false_belief.is_some() => {
                let o = ev.objects[0];
                let victim = follower;
                let mover = leader;
                let (p1, p2, p3, p4) = (p(25), p(40), p(70), p(85));
                let origin = self.cur[o as usize];
                let bag = self.layout.bag.center();
                let yaw_a = self.idle_yaw();
                let yaw_b = self.idle_yaw();
                set(&mut plans, mover, start, end, &|pl| pl.look = Look::Idle(yaw_a));
                set(&mut plans, mover, p2, p2 + 5, &|pl| pl.look = Look::Object(o));
                set(&mut plans, mover, p2 + 5, p3 - 5, &|pl| {
                    pl.look = Look::Object(o);
                    pl.carry = Some(o);
                });
                set(&mut plans, mover, p3 - 5, p3, &|pl| pl.look = Look::Place(bag));
                set(&mut plans, victim, start, p1, &|pl| pl.look = Look::Object(o));
                set(&mut plans, victim, p1, end, &|pl| pl.look = Look::Idle(yaw_b));
                if ev.false_belief == Some(1) {
                    let home = self.layout.homes[victim];
                    let exit = self.layout.exit;
                    for t in p1..p4 {
                        let pl = &mut plans[victim][t - start];
                        pl.walking = true;
                        pl.body = if t < p2 {
                            home.lerp(exit, (t - p1 + 1) as f64 / (p2 - p1) as f64)
                        } else if t < p3 {
                            exit
                        } else {
                            exit.lerp(home, (t - p3 + 1) as f64 / (p4 - p3) as f64)
                        };
                        let heading = if t < p3 { PI } else { 0.0 };
                        pl.look = Look::Away(heading);
                        pl.walking = t < p2 || t >= p3;
                    }
                    set(&mut plans, victim, p4, end, &|pl| pl.look = Look::Place(origin));
                } else {
                    set(&mut plans, victim, p2, p3, &|pl| pl.look = Look::Object(o));
                }
                self.relocate(o, bag, p2 + 5, p3 - 5, start);
                self.slot_of[o as usize] = None;
            }
            EventLabel::NoCommunication => {
                let mut targets = [None, None];
                if ev.objects.is_empty() {
                    let mut vis = self.visible_objects();
                    vis.shuffle(&mut self.rng);
                    targets = [vis.first().copied(), vis.get(1).copied()];
                    if self.rng.gen_bool(0.5) {
                        targets.swap(0, 1);
                    }
                } else {
                    targets[0] = Some(ev.objects[0]);
                    targets[1] = ev.objects.get(1).copied();
                }
                for (agent, target) in targets.into_iter().enumerate() {
                    let mut t = start;
                    let mut on_object = self.rng.gen_bool(0.5);
                    while t < end {
                        let len = self.rng.gen_range(CHUNK_FRAMES.0..=CHUNK_FRAMES.1);
                        let stop = (t + len).min(end);
                        let look = match target {
                            Some(o) if on_object => Look::Object(o),
                            _ => Look::Idle(self.idle_yaw()),
                        };
                        set(&mut plans, agent, t, stop, &|pl| pl.look = look);
                        on_object = !on_object;
                        t = stop;
                    }
                }
            }
            EventLabel::AttentionFollowing => {
                let o = self.pick_object(&ev.objects);
                set(&mut plans, leader, start, end, &|pl| pl.look = Look::Object(o));
                set(&mut plans, follower, start, p(30), &|pl| pl.look = Look::Agent);
                set(&mut plans, follower, p(30), end, &|pl| pl.look = Look::Object(o));
                if self.slot_of[o as usize].is_some() && self.rng.gen_bool(0.5) {
                    if let Some(s) = self.free_slot() {
                        set(&mut plans, leader, p(50), p(70), &|pl| pl.carry = Some(o));
                        self.relocate(o, self.layout.slots[s], p(50), p(70), start);
                        self.slot_of[o as usize] = Some(s);
                    }
                }
            }
            EventLabel::JointAttention => {
                let o = self.pick_object(&ev.objects);
                for a in [leader, follower] {
                    set(&mut plans, a, start, p(20), &|pl| pl.look = Look::Agent);
                    set(&mut plans, a, p(30), end, &|pl| pl.look = Look::Object(o));
                }
                set(&mut plans, leader, p(20), p(30), &|pl| pl.look = Look::Object(o));
                set(&mut plans, follower, p(20), p(30), &|pl| pl.look = Look::Agent);
                set(&mut plans, leader, p(20), p(45), &|pl| pl.point = Some(o));
                set(&mut plans, leader, p(70), p(80), &|pl| pl.look = Look::Agent);
                if self.slot_of[o as usize].is_some() && self.rng.gen_bool(0.5) {
                    if let Some(s) = self.free_slot() {
                        set(&mut plans, leader, p(45), p(60), &|pl| pl.carry = Some(o));
                        self.relocate(o, self.layout.slots[s], p(45), p(60), start);
                        self.slot_of[o as usize] = Some(s);
                    }
                }
            }
        }
        let [a, b] = plans;
        self.plans[0].extend(a);
        self.plans[1].extend(b);
        let objs = std::mem::take(&mut self.event_objects);
        self.all_objects.extend(objs);
    }

    fn direction(&self, look: Look, t: usize, heads: &[Vec3; 2], agent: usize) -> Vec3 {
        let pitch = IDLE_PITCH_DEG.to_radians();
        match look {
            Look::Idle(yaw) | Look::Away(yaw) => Vec3::new(
                yaw.cos() * pitch.cos(),
                yaw.sin() * pitch.cos(),
                pitch.sin(),
            ),
            Look::Agent => heads[1 - agent] - heads[agent],
            Look::Object(o) => self.all_objects[t][o as usize] - heads[agent],
            Look::Place(p) => p - heads[agent],
        }
    }

    fn perturb(&mut self, dir: Vec3) -> Vec3 {
        let d = dir.normalized();
        let helper = if d.z.abs() < 0.9 { Vec3::Z } else { Vec3::X };
        let u = d.cross(helper).normalized();
        let v = d.cross(u);
        let n = GAZE_NOISE_DEG.to_radians();
        let a: f64 = self.rng.gen_range(-n..=n);
        let b: f64 = self.rng.gen_range(-n..=n);
        (d + u * a.tan() + v * b.tan()).normalized()
    }

    fn render(mut self, categories: &[Category]) -> WorldTrace {
        let frames_total = self.plans[0].len();
        let joints = self.spec.joints;
        let mut frames = Vec::with_capacity(frames_total);
        for t in 0..frames_total {
            let plans = [self.plans[0][t], self.plans[1][t]];
            let mut bodies = [Vec3::ZERO; 2];
            for (i, pl) in plans.iter().enumerate() {
                let sx: f64 = self.rng.gen_range(-SWAY..=SWAY);
                let sy: f64 = self.rng.gen_range(-SWAY..=SWAY);
                bodies[i] = if pl.walking {
                    pl.body
                } else {
                    pl.body + Vec3::new(sx, sy, 0.0)
                };
            }
            let heads = bodies.map(|b| b + Vec3::Z * EYE_HEIGHT);
            let mut agents = Vec::with_capacity(2);
            for (i, pl) in plans.iter().enumerate() {
                let dir = self.direction(pl.look, t, &heads, i);
                let gaze = self.perturb(dir);
                let objects = &self.all_objects[t];
                agents.push(build_agent(bodies[i], heads[i], gaze, pl, objects, t, joints));
            }
            let objects = self.all_objects[t]
                .iter()
                .enumerate()
                .map(|(o, &p)| ObjectState {
                    position: round_vec(p),
                    category: categories[o],
                    object_id: o as u32,
                })
                .collect();
            let [a, b]: [AgentState; 2] = agents.try_into().expect("two agents");
            frames.push(Frame {
                t,
                agents: [a, b],
                objects,
            });
        }
        WorldTrace {
            frame_rate: self.spec.frame_rate,
            occluders: vec![self.layout.bag],
            frames,
        }
    }
}

fn round_vec(v: Vec3) -> Vec3 {
    Vec3::new(
        round_sig(v.x, TRACE_DIGITS),
        round_sig(v.y, TRACE_DIGITS),
        round_sig(v.z, TRACE_DIGITS),
    )
}

fn build_agent(
    body: Vec3,
    head: Vec3,
    gaze: Vec3,
    plan: &Plan,
    objects: &[Vec3],
    t: usize,
    joints: usize,
) -> AgentState {
    let yaw = gaze.y.atan2(gaze.x);
    let fwd = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    let left = Vec3::new(-yaw.sin(), yaw.cos(), 0.0);
    let torso = body + Vec3::Z * TORSO_HEIGHT;
    let mut pose = vec![Vec3::ZERO; joints];
    pose[JOINT_HEAD] = head;
    pose[JOINT_TORSO] = torso;
    pose[JOINT_LEFT_HAND] = torso + left * 0.22 - Vec3::Z * 0.25;
    pose[JOINT_RIGHT_HAND] = torso - left * 0.22 - Vec3::Z * 0.25;
    let stride = if plan.walking {
        0.15 * (t as f64 * 0.8).sin()
    } else {
        0.0
    };
    pose[JOINT_LEFT_FOOT] = body + left * 0.12 + fwd * stride;
    pose[JOINT_RIGHT_FOOT] = body - left * 0.12 - fwd * stride;
    let extra = joints - super::MIN_JOINTS;
    for k in 0..extra {
        pose[super::MIN_JOINTS + k] = torso.lerp(head, (k + 1) as f64 / (extra + 1) as f64);
    }
    if let Some(o) = plan.carry {
        let target = objects[o as usize];
        let reach = (target - torso).norm().min(0.6);
        pose[JOINT_RIGHT_HAND] = torso + (target - torso).normalized() * reach;
    }
    let mut pointing = None;
    if let Some(o) = plan.point {
        let target = objects[o as usize];
        let shoulder = body + Vec3::Z * SHOULDER_HEIGHT - left * 0.2;
        let hand = shoulder + (target - shoulder).normalized() * 0.6;
        pose[JOINT_RIGHT_HAND] = hand;
        pointing = Some(round_vec((target - hand).normalized()));
    }
    AgentState {
        position: round_vec(body),
        pose: pose.into_iter().map(round_vec).collect(),
        gaze: round_vec(gaze),
        pointing,
    }
}
