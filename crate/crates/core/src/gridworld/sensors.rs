use super::{Cell, Direction, GridState, Task};

/// Egocentric sensor sides, in the order they appear in raw percepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Up,
    Down,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Up, Side::Down];

    pub fn direction(self) -> Direction {
        match self {
            Side::Left => Direction::West,
            Side::Right => Direction::East,
            Side::Up => Direction::North,
            Side::Down => Direction::South,
        }
    }

    pub fn of(dir: Direction) -> Side {
        match dir {
            Direction::West => Side::Left,
            Direction::East => Side::Right,
            Direction::North => Side::Up,
            Direction::South => Side::Down,
        }
    }

    /// Whether `other` lies in the open half-plane on this side of `from`.
    fn sees(self, from: Cell, other: Cell) -> bool {
        match self {
            Side::Left => other.x < from.x,
            Side::Right => other.x > from.x,
            Side::Up => other.y < from.y,
            Side::Down => other.y > from.y,
        }
    }
}

/// 4 sensors per side plus the noKey sensor.
pub const NUM_RAW_PERCEPTS: usize = 17;

/// What the agent senses, indexed by [`Side`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Percepts {
    pub key: [f64; 4],
    pub lock: [f64; 4],
    pub beacon: [f64; 4],
    pub pit: [bool; 4],
    /// Every key in the room has been picked up.
    pub no_key: bool,
}

impl Percepts {
    /// Flat layout: `side * 4 + {0: key, 1: lock, 2: beacon, 3: pit}`,
    /// then noKey at index 16.
    pub fn raw(&self) -> [f64; NUM_RAW_PERCEPTS] {
        let mut out = [0.0; NUM_RAW_PERCEPTS];
        for s in 0..4 {
            out[s * 4] = self.key[s];
            out[s * 4 + 1] = self.lock[s];
            out[s * 4 + 2] = self.beacon[s];
            out[s * 4 + 3] = f64::from(u8::from(self.pit[s]));
        }
        out[16] = f64::from(u8::from(self.no_key));
        out
    }
}

fn nearest(from: Cell, side: Side, cells: impl Iterator<Item = Cell>, range: f64) -> f64 {
    cells
        .filter(|&c| side.sees(from, c))
        .map(|c| from.distance(c))
        .fold(range, f64::min)
}

/// Reads the sensors. `range` is reported when a side sees nothing and caps
/// every distance.
pub fn sense(state: &GridState, task: &Task, range: f64) -> Percepts {
    let pos = state.agent_pos;
    let spec = task.spec();
    let keys = || {
        spec.keys
            .iter()
            .enumerate()
            .filter(|&(k, _)| !state.holds_key(k))
            .map(|(_, &c)| c)
    };
    let locks = || {
        spec.locks
            .iter()
            .enumerate()
            .filter(|&(l, _)| !state.lock_open(l))
            .map(|(_, l)| l.position)
    };
    let mut p = Percepts {
        key: [range; 4],
        lock: [range; 4],
        beacon: [range; 4],
        pit: [false; 4],
        no_key: state.keys_held == task.all_keys_mask(),
    };
    for (i, side) in Side::ALL.into_iter().enumerate() {
        p.key[i] = nearest(pos, side, keys(), range);
        p.lock[i] = nearest(pos, side, locks(), range);
        p.beacon[i] = nearest(pos, side, task.beacons().iter().copied(), range);
        let next = pos.offset(side.direction().delta());
        p.pit[i] = task.is_pit(next) && !state.is_bridged(next);
    }
    p
}
