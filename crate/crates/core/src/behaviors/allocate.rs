//! Lowest-cost task allocation over the replicated cost table.

use crate::comms::stigmergy::{Replica, Table};
use crate::error::{Error, Result};

/// Winner of a cost negotiation: lowest cost, ties to the lowest id.
pub fn allocate(candidates: &[(u16, f64)]) -> Result<u16> {
    candidates
        .iter()
        .filter(|(_, c)| c.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(id, _)| *id)
        .ok_or(Error::EmptyAllocation)
}

/// Encode a bid for the cost table.
pub fn encode_cost(cost: f64) -> Vec<u8> {
    cost.to_le_bytes().to_vec()
}

pub fn decode_cost(bytes: &[u8]) -> Option<f64> {
    bytes.try_into().ok().map(f64::from_le_bytes)
}

/// Cost-table key for a bid: `cost/<target>/<robot>`.
pub fn bid_key(target_id: u32, robot: u16) -> String {
    Table::CostNegotiation.key(format_args!("{target_id:08}/{robot:05}"))
}

/// All bids for a target currently visible in a replica.
pub fn bids_for(replica: &Replica, target_id: u32) -> Vec<(u16, f64)> {
    let prefix = format!("{target_id:08}/");
    replica
        .iter_table(Table::CostNegotiation)
        .filter_map(|(suffix, entry)| {
            let rest = suffix.strip_prefix(&prefix)?;
            let robot: u16 = rest.parse().ok()?;
            let cost = decode_cost(&entry.value)?;
            Some((robot, cost))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_with_id_tiebreak() {
        assert_eq!(allocate(&[(3, 5.0), (7, 2.0)]).unwrap(), 7);
        assert_eq!(allocate(&[(3, 2.0), (7, 2.0)]).unwrap(), 3);
        assert_eq!(allocate(&[(9, 4.5)]).unwrap(), 9);
        assert!(allocate(&[]).is_err());
        assert!(allocate(&[(1, f64::NAN)]).is_err());
    }

    #[test]
    fn bids_round_trip_through_a_replica() {
        let mut r = Replica::new();
        r.put(3, bid_key(0, 3), encode_cost(5.0)).unwrap();
        r.put(7, bid_key(0, 7), encode_cost(2.0)).unwrap();
        r.put(7, bid_key(1, 7), encode_cost(9.0)).unwrap();
        let bids = bids_for(&r, 0);
        assert_eq!(bids.len(), 2);
        assert_eq!(allocate(&bids).unwrap(), 7);
        assert_eq!(bids_for(&r, 1), vec![(7, 9.0)]);
    }
}
