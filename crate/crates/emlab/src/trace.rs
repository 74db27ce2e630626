//! Iteration traces recorded by every solver.

use crate::vector::ParamVec;

/// One recorded iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    /// Iteration index; record 0 is the initialization.
    pub t: usize,
    /// The full iterate, kept so errors can be recomputed after the fact
    /// against any reference point.
    pub theta: ParamVec,
    /// Distance to the finite-sample optimum, once a reference is attached.
    pub opt_error: Option<f64>,
    /// Distance to the true parameter, once a reference is attached.
    pub stat_error: Option<f64>,
}

/// An ordered list of iterates with strictly increasing iteration indices
/// starting at 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Trace {
            records: Vec::new(),
        }
    }

    /// Appends an iterate; panics if the index does not continue `0, 1, 2, …`.
    pub fn push(&mut self, t: usize, theta: ParamVec) {
        assert_eq!(
            t,
            self.records.len(),
            "trace indices must increase from 0 without gaps"
        );
        self.records.push(TraceRecord {
            t,
            theta,
            opt_error: None,
            stat_error: None,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last_theta(&self) -> Option<&ParamVec> {
        self.records.last().map(|r| &r.theta)
    }

    /// Fills both error columns by measuring each iterate against the given
    /// finite-sample optimum and true parameter.
    pub fn attach_errors(&mut self, opt_reference: &ParamVec, truth: &ParamVec) {
        for r in &mut self.records {
            r.opt_error = Some(r.theta.dist(opt_reference));
            r.stat_error = Some(r.theta.dist(truth));
        }
    }

    /// The optimization-error column, if attached.
    pub fn opt_errors(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.opt_error).collect()
    }

    /// The statistical-error column, if attached.
    pub fn stat_errors(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.stat_error).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_enforces_contiguous_indices_and_errors_attach() {
        let mut trace = Trace::new();
        trace.push(0, ParamVec::new(vec![2.0]));
        trace.push(1, ParamVec::new(vec![1.0]));
        trace.push(2, ParamVec::new(vec![0.5]));
        assert_eq!(trace.len(), 3);

        trace.attach_errors(&ParamVec::new(vec![0.0]), &ParamVec::new(vec![0.25]));
        assert_eq!(trace.opt_errors().unwrap(), vec![2.0, 1.0, 0.5]);
        assert_eq!(trace.stat_errors().unwrap(), vec![1.75, 0.75, 0.25]);
    }

    #[test]
    #[should_panic(expected = "trace indices")]
    fn out_of_order_push_panics() {
        let mut trace = Trace::new();
        trace.push(1, ParamVec::zeros(1));
    }
}
