//! Viewpoint curriculum: epochs are split into `P` phases, and in phase `p`
//! the positive target for a source at rank `r` sits at rank `max(0, r - p)`.
//! The final phase gets a fixed share of the epochs; the rest is spread over
//! the earlier phases as evenly as possible, earliest phases first.

use serde::{Deserialize, Serialize};

use crate::calib_io::Take;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    total_epochs: usize,
    phases: usize,
    final_phase_epochs: usize,
    phase_lengths: Vec<usize>,
    /// First epoch of each phase.
    phase_boundaries: Vec<usize>,
}

/// Nearest integer with halves rounded away from zero (`f64::round`).
fn round_half_away(x: f64) -> usize {
    x.round() as usize
}

pub fn build_schedule(total_epochs: usize, phases: usize, final_fraction: f64) -> Result<CurriculumSchedule> {
    if phases == 0 {
        return Err(Error::Config("at least one phase is required".into()));
    }
    if total_epochs < phases {
        return Err(Error::Config(format!("{total_epochs} epochs cannot cover {phases} phases")));
    }
    let lengths = if phases == 1 {
        vec![total_epochs]
    } else {
        if !(final_fraction > 0.0 && final_fraction < 1.0) {
            return Err(Error::Config(format!("final phase fraction must lie in (0, 1), got {final_fraction}")));
        }
        let final_len = round_half_away(final_fraction * total_epochs as f64);
        if final_len == 0 || final_len >= total_epochs {
            return Err(Error::Config(format!("final phase length {final_len} must lie in [1, {total_epochs})")));
        }
        let early = total_epochs - final_len;
        let (base, extra) = (early / (phases - 1), early % (phases - 1));
        if base == 0 {
            return Err(Error::Config(format!(
                "{early} epochs left for {} early phases; every phase needs at least one",
                phases - 1
            )));
        }
        let mut lengths: Vec<usize> = (0..phases - 1).map(|i| base + usize::from(i < extra)).collect();
        lengths.push(final_len);
        lengths
    };
    let phase_boundaries = lengths
        .iter()
        .scan(0, |start, len| {
            let b = *start;
            *start += len;
            Some(b)
        })
        .collect();
    Ok(CurriculumSchedule {
        total_epochs,
        phases,
        final_phase_epochs: *lengths.last().expect("at least one phase"),
        phase_lengths: lengths,
        phase_boundaries,
    })
}

impl CurriculumSchedule {
    pub fn total_epochs(&self) -> usize {
        self.total_epochs
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn final_phase_epochs(&self) -> usize {
        self.final_phase_epochs
    }

    pub fn phase_lengths(&self) -> &[usize] {
        &self.phase_lengths
    }

    pub fn phase_boundaries(&self) -> &[usize] {
        &self.phase_boundaries
    }

    /// 1-based phase of `epoch`.
    pub fn phase_at(&self, epoch: usize) -> Result<usize> {
        if epoch >= self.total_epochs {
            return Err(Error::Contract(format!("epoch {epoch} outside 0..{}", self.total_epochs)));
        }
        Ok(self.phase_boundaries.partition_point(|&b| b <= epoch))
    }

    /// Compact JSON report used by the CLI.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedule serialises")
    }
}

/// Rank of the positive target for a source at `source_rank` in `phase`.
///
/// The ego source (rank 0) always distils from the top exo view (rank 1).
pub fn positive_rank(source_rank: usize, phase: usize, n_views: usize) -> usize {
    if source_rank == 0 {
        debug_assert!(n_views >= 2, "ego source needs an exo view");
        1
    } else {
        source_rank.saturating_sub(phase)
    }
}

/// Largest view count (ego + exo) over a collection of takes.
pub fn phases_for_takes<'a>(takes: impl IntoIterator<Item = &'a Take>) -> usize {
    takes.into_iter().map(Take::n_views).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule() {
        let s = build_schedule(200, 5, 0.5).unwrap();
        assert_eq!(s.phase_lengths(), &[25, 25, 25, 25, 100]);
        assert_eq!(s.phase_boundaries(), &[0, 25, 50, 75, 100]);
        assert_eq!(s.final_phase_epochs(), 100);
    }

    #[test]
    fn single_phase_and_remainder() {
        assert_eq!(build_schedule(10, 1, 0.5).unwrap().phase_lengths(), &[10]);
        assert_eq!(build_schedule(11, 3, 0.5).unwrap().phase_lengths(), &[3, 2, 6]);
    }

    #[test]
    fn invalid_configs() {
        assert!(matches!(build_schedule(3, 5, 0.5), Err(Error::Config(_))));
        assert!(build_schedule(10, 0, 0.5).is_err());
        assert!(build_schedule(10, 3, 1.0).is_err());
        assert!(build_schedule(10, 3, 0.0).is_err());
        // 5 epochs, 5 phases: the final phase takes 3, leaving 2 for 4 phases
        assert!(build_schedule(5, 5, 0.5).is_err());
    }

    #[test]
    fn phase_lookup() {
        let s = build_schedule(200, 5, 0.5).unwrap();
        assert_eq!(s.phase_at(0), Ok(1));
        assert_eq!(s.phase_at(99), Ok(4));
        assert_eq!(s.phase_at(100), Ok(5));
        assert_eq!(s.phase_at(199), Ok(5));
        assert!(matches!(s.phase_at(200), Err(Error::Contract(_))));
    }

    #[test]
    fn positive_rank_examples() {
        assert_eq!(positive_rank(4, 2, 6), 2);
        assert_eq!(positive_rank(3, 10, 6), 0);
        for p in 1..8 {
            assert_eq!(positive_rank(0, p, 6), 1);
        }
    }

    #[test]
    fn json_report() {
        let s = build_schedule(200, 5, 0.5).unwrap();
        assert!(s.to_json().contains("\"phase_lengths\":[25,25,25,25,100]"));
    }
}
