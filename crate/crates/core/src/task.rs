//! The four supervision tasks and per-task containers.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    /// Binary edge detection.
    Edge,
    /// Semantic segmentation (the main task).
    Segmentation,
    /// Semantic contours: class labels restricted to boundary pixels.
    Contour,
    /// Quantized distance transform.
    Distance,
}

impl Task {
    /// Canonical order, used for every fixed-order reduction across tasks.
    pub const ALL: [Task; 4] = [
        Task::Edge,
        Task::Segmentation,
        Task::Contour,
        Task::Distance,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn letter(self) -> char {
        match self {
            Task::Edge => 'E',
            Task::Segmentation => 'S',
            Task::Contour => 'C',
            Task::Distance => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Task> {
        match c.to_ascii_uppercase() {
            'E' => Some(Task::Edge),
            'S' => Some(Task::Segmentation),
            'C' => Some(Task::Contour),
            'D' => Some(Task::Distance),
            _ => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A subset of [`Task::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TaskSet([bool; 4]);

impl TaskSet {
    pub const fn empty() -> Self {
        TaskSet([false; 4])
    }

    pub const fn all() -> Self {
        TaskSet([true; 4])
    }

    pub fn only(task: Task) -> Self {
        let mut s = Self::empty();
        s.insert(task);
        s
    }

    pub fn insert(&mut self, task: Task) {
        self.0[task.index()] = true;
    }

    pub fn remove(&mut self, task: Task) {
        self.0[task.index()] = false;
    }

    pub fn contains(&self, task: Task) -> bool {
        self.0[task.index()]
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Members in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = Task> + '_ {
        Task::ALL.into_iter().filter(|t| self.contains(*t))
    }
}

impl FromIterator<Task> for TaskSet {
    fn from_iter<I: IntoIterator<Item = Task>>(iter: I) -> Self {
        let mut s = TaskSet::empty();
        for t in iter {
            s.insert(t);
        }
        s
    }
}

/// Parses comma- or plus-separated letters, e.g. `S,E,C,D` or `S+E`.
impl FromStr for TaskSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = TaskSet::empty();
        for part in s.split([',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
            let mut chars = part.chars();
            let task = match (chars.next(), chars.next()) {
                (Some(c), None) => Task::from_letter(c),
                _ => None,
            };
            set.insert(task.ok_or_else(|| {
                Error::Config(format!("unknown task `{part}` (expected E, S, C or D)"))
            })?);
        }
        Ok(set)
    }
}

impl fmt::Display for TaskSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.iter().map(|t| t.to_string()).collect();
        f.write_str(&letters.join(","))
    }
}

/// One value per task, indexable by [`Task`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerTask<T>(pub [T; 4]);

impl<T> PerTask<T> {
    pub fn from_fn(mut f: impl FnMut(Task) -> T) -> Self {
        PerTask(Task::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Task, &T)> {
        Task::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T> Index<Task> for PerTask<T> {
    type Output = T;
    fn index(&self, t: Task) -> &T {
        &self.0[t.index()]
    }
}

impl<T> IndexMut<Task> for PerTask<T> {
    fn index_mut(&mut self, t: Task) -> &mut T {
        &mut self.0[t.index()]
    }
}
