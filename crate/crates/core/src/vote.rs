use crate::error::VoteError;
use crate::labels::{LabelState, LabelVector};

/// Per-disorder strict majority across model vectors; ties go to positive.
///
/// Every vector must carry a definite state for the same set of disorders.
pub fn majority_vote(votes: &[LabelVector]) -> Result<LabelVector, VoteError> {
    if votes.len() < 2 {
        return Err(VoteError::TooFewVoters(votes.len()));
    }
    let first = &votes[0];
    for (i, v) in votes.iter().enumerate() {
        let same_keys = v.len() == first.len() && v.keys().eq(first.keys());
        if !same_keys || v.iter().any(|(_, s)| !s.is_definite()) {
            return Err(VoteError::CoverageMismatch { voter: i });
        }
    }
    Ok(first
        .keys()
        .map(|id| {
            let positives = votes
                .iter()
                .filter(|v| v.get(id.as_str()) == LabelState::Positive)
                .count();
            let negatives = votes.len() - positives;
            (id.clone(), LabelState::from_bool(positives >= negatives))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use LabelState::{Negative as N, Positive as P};

    fn v(s: LabelState) -> LabelVector {
        LabelVector::new().with("depression", s)
    }

    #[test]
    fn strict_majority() {
        assert_eq!(majority_vote(&[v(P), v(P), v(N)]).unwrap().get("depression"), P);
        assert_eq!(
            majority_vote(&[v(N), v(N), v(N), v(P), v(P)])
                .unwrap()
                .get("depression"),
            N
        );
    }

    #[test]
    fn tie_goes_positive() {
        assert_eq!(majority_vote(&[v(P), v(N)]).unwrap().get("depression"), P);
    }

    #[test]
    fn coverage_errors() {
        assert_eq!(majority_vote(&[v(P)]), Err(VoteError::TooFewVoters(1)));
        let other = LabelVector::new().with("stress", P);
        assert_eq!(
            majority_vote(&[v(P), other]),
            Err(VoteError::CoverageMismatch { voter: 1 })
        );
        assert!(majority_vote(&[v(P), v(LabelState::Unknown)]).is_err());
    }
}
