use std::io::Write;

use crate::error::Result;
use crate::task::Task;

/// One logged training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    /// 1-based step index.
    pub iteration: usize,
    pub total: f64,
    /// Per-task loss `L_t` averaged over the batch, in E, S, C, D order;
    /// 0 for tasks outside the objective.
    pub task_loss: [f64; 4],
    pub holdout_miou: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn header() -> String {
        let mut h = "iter,total".to_string();
        for t in Task::ALL {
            h.push_str(&format!(",loss_{}", t.letter()));
        }
        h + ",holdout_miou"
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::header())?;
        for r in &self.rows {
            write!(out, "{},{}", r.iteration, r.total)?;
            for v in r.task_loss {
                write!(out, ",{v}")?;
            }
            match r.holdout_miou {
                Some(m) => writeln!(out, ",{m}")?,
                None => writeln!(out, ",")?,
            }
        }
        Ok(())
    }

    pub fn last_total(&self) -> Option<f64> {
        self.rows.last().map(|r| r.total)
    }

    pub fn last_holdout_miou(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.holdout_miou)
    }
}
