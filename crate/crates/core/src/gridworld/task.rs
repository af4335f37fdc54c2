use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A grid cell; `x` grows east, `y` grows south, `(0, 0)` is the north-west
/// corner. Serialized as `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, (dx, dy): (i32, i32)) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn distance(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        dx.hypot(dy)
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl From<[i32; 2]> for Cell {
    fn from([x, y]: [i32; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lock {
    pub position: Cell,
    /// Indices into the task's key list.
    #[serde(default)]
    pub requires: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    AllLocksUnlocked,
    AllKeysCollected,
}

fn default_max_episode_steps() -> u32 {
    500
}

/// One gridworld task as written in a task config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    pub width: i32,
    pub height: i32,
    #[serde(default)]
    pub keys: Vec<Cell>,
    #[serde(default)]
    pub locks: Vec<Lock>,
    #[serde(default)]
    pub pits: Vec<Cell>,
    pub agent_start: Cell,
    /// A pit separates the start from the goal, so the goal can only be
    /// reached by bridging it.
    #[serde(default)]
    pub rope_required: bool,
    pub termination: Termination,
    #[serde(default = "default_max_episode_steps")]
    pub max_episode_steps: u32,
}

impl TaskSpec {
    pub fn from_toml(text: &str, origin: &Path) -> Result<TaskSpec> {
        toml::from_str(text).map_err(|source| Error::Parse {
            path: origin.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<TaskSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("task spec serializes")
    }

    pub fn contains(&self, c: Cell) -> bool {
        (0..self.width).contains(&c.x) && (0..self.height).contains(&c.y)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::config(format!("task {}: {msg}", self.id)));
        if self.width < 1 || self.height < 1 {
            return err(format!("grid {}x{} is empty", self.width, self.height));
        }
        if self.keys.len() > 64 || self.locks.len() > 64 {
            return err("at most 64 keys and 64 locks are supported".into());
        }
        if self.max_episode_steps == 0 {
            return err("max_episode_steps must be positive".into());
        }
        let objects = std::iter::once(("agent start", self.agent_start))
            .chain(self.keys.iter().map(|&c| ("key", c)))
            .chain(self.locks.iter().map(|l| ("lock", l.position)))
            .chain(self.pits.iter().map(|&c| ("pit", c)));
        let mut seen = HashSet::new();
        for (what, cell) in objects {
            if !self.contains(cell) {
                return err(format!("{what} at {cell} lies outside the grid"));
            }
            if !seen.insert(cell) {
                return err(format!("{what} at {cell} overlaps another object"));
            }
        }
        for (i, lock) in self.locks.iter().enumerate() {
            if let Some(&k) = lock.requires.iter().find(|&&k| k >= self.keys.len()) {
                return err(format!("lock {i} requires missing key {k}"));
            }
        }
        match (self.termination, self.locks.is_empty()) {
            (Termination::AllKeysCollected, false) => {
                return err("all-keys-collected termination requires a task without locks".into())
            }
            (Termination::AllLocksUnlocked, true) => {
                return err("all-locks-unlocked termination requires at least one lock".into())
            }
            _ => {}
        }
        if self.locks.is_empty() && self.keys.is_empty() {
            return err("task has neither keys nor locks".into());
        }
        Ok(())
    }
}

/// A validated task with lookup tables for the dynamics and sensors.
#[derive(Clone, Debug)]
pub struct Task {
    spec: TaskSpec,
    beacons: Vec<Cell>,
    pit_mask: Vec<bool>,
    lock_at: Vec<Option<u8>>,
    key_at: Vec<Option<u8>>,
    lock_requirements: Vec<u64>,
}

impl Task {
    pub fn new(spec: TaskSpec) -> Result<Task> {
        spec.validate()?;
        let cells = (spec.width * spec.height) as usize;
        let mut pit_mask = vec![false; cells];
        let mut lock_at = vec![None; cells];
        let mut key_at = vec![None; cells];
        let idx = |c: Cell| (c.y * spec.width + c.x) as usize;
        for &p in &spec.pits {
            pit_mask[idx(p)] = true;
        }
        for (i, l) in spec.locks.iter().enumerate() {
            lock_at[idx(l.position)] = Some(i as u8);
        }
        for (i, &k) in spec.keys.iter().enumerate() {
            key_at[idx(k)] = Some(i as u8);
        }
        let mut beacons: Vec<Cell> = spec
            .pits
            .iter()
            .flat_map(|&p| [(-1, -1), (1, -1), (-1, 1), (1, 1)].map(|d| p.offset(d)))
            .filter(|&c| spec.contains(c) && !pit_mask[idx(c)])
            .collect();
        beacons.sort();
        beacons.dedup();
        let lock_requirements = spec
            .locks
            .iter()
            .map(|l| l.requires.iter().fold(0u64, |m, &k| m | 1 << k))
            .collect();
        Ok(Task {
            spec,
            beacons,
            pit_mask,
            lock_at,
            key_at,
            lock_requirements,
        })
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn beacons(&self) -> &[Cell] {
        &self.beacons
    }

    fn index(&self, c: Cell) -> Option<usize> {
        self.spec
            .contains(c)
            .then(|| (c.y * self.spec.width + c.x) as usize)
    }

    pub fn is_pit(&self, c: Cell) -> bool {
        self.index(c).is_some_and(|i| self.pit_mask[i])
    }

    pub fn lock_at(&self, c: Cell) -> Option<usize> {
        self.index(c).and_then(|i| self.lock_at[i]).map(usize::from)
    }

    pub fn key_at(&self, c: Cell) -> Option<usize> {
        self.index(c).and_then(|i| self.key_at[i]).map(usize::from)
    }

    /// Bitmask of the keys lock `lock` needs.
    pub fn lock_requirement(&self, lock: usize) -> u64 {
        self.lock_requirements[lock]
    }

    pub fn all_keys_mask(&self) -> u64 {
        low_bits(self.spec.keys.len())
    }

    pub fn all_locks_mask(&self) -> u64 {
        low_bits(self.spec.locks.len())
    }

    /// Whether the given key/lock progress satisfies the termination rule.
    pub fn goal_met(&self, keys_held: u64, locks_open: u64) -> bool {
        match self.spec.termination {
            Termination::AllKeysCollected => keys_held == self.all_keys_mask(),
            Termination::AllLocksUnlocked => locks_open == self.all_locks_mask(),
        }
    }

    pub fn diagonal(&self) -> f64 {
        f64::from(self.spec.width).hypot(f64::from(self.spec.height))
    }
}

fn low_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// The ordered set of tasks a curriculum can draw from.
#[derive(Clone, Debug)]
pub struct TaskSuite {
    tasks: Vec<Task>,
}

const BUILTIN_TASKS: [(&str, &str); 11] = [
    (
        "task01.toml",
        include_str!("../../configs/tasks/task01.toml"),
    ),
    (
        "task02.toml",
        include_str!("../../configs/tasks/task02.toml"),
    ),
    (
        "task03.toml",
        include_str!("../../configs/tasks/task03.toml"),
    ),
    (
        "task04.toml",
        include_str!("../../configs/tasks/task04.toml"),
    ),
    (
        "task05.toml",
        include_str!("../../configs/tasks/task05.toml"),
    ),
    (
        "task06.toml",
        include_str!("../../configs/tasks/task06.toml"),
    ),
    (
        "task07.toml",
        include_str!("../../configs/tasks/task07.toml"),
    ),
    (
        "task08.toml",
        include_str!("../../configs/tasks/task08.toml"),
    ),
    (
        "task09.toml",
        include_str!("../../configs/tasks/task09.toml"),
    ),
    (
        "task10.toml",
        include_str!("../../configs/tasks/task10.toml"),
    ),
    (
        "target.toml",
        include_str!("../../configs/tasks/target.toml"),
    ),
];

impl TaskSuite {
    pub fn new(specs: Vec<TaskSpec>) -> Result<TaskSuite> {
        let mut ids = HashSet::new();
        for s in &specs {
            if !ids.insert(s.id.clone()) {
                return Err(Error::config(format!("duplicate task id {}", s.id)));
            }
        }
        if specs.is_empty() {
            return Err(Error::config("task suite is empty"));
        }
        let tasks = specs.into_iter().map(Task::new).collect::<Result<_>>()?;
        Ok(TaskSuite { tasks })
    }

    /// The ten source tasks and the target task shipped with the crate.
    pub fn builtin() -> TaskSuite {
        let specs = BUILTIN_TASKS
            .iter()
            .map(|(name, text)| TaskSpec::from_toml(text, Path::new(name)))
            .collect::<Result<Vec<_>>>()
            .expect("builtin task configs parse");
        TaskSuite::new(specs).expect("builtin task configs are valid")
    }

    /// Loads every `*.toml` file in `dir`, ordered by file name.
    pub fn load_dir(dir: &Path) -> Result<TaskSuite> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().is_some_and(|e| e == "toml") {
                paths.push(path);
            }
        }
        paths.sort();
        let specs = paths
            .iter()
            .map(|p| TaskSpec::load(p))
            .collect::<Result<Vec<_>>>()?;
        TaskSuite::new(specs)
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn get(&self, index: usize) -> &Task {
        &self.tasks[index]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.id() == id)
    }

    pub fn by_id(&self, id: &str) -> Option<&Task> {
        self.position(id).map(|i| &self.tasks[i])
    }

    /// The largest grid diagonal in the suite; sensors report this distance
    /// when nothing is visible on a side.
    pub fn sensor_range(&self) -> f64 {
        self.tasks.iter().map(Task::diagonal).fold(0.0, f64::max)
    }
}
