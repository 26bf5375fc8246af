//! Sequential voting by exhaustive search over assignments.

use concord_core::combinatorial::{Assignment, CpNet};

fn preferred(net: &CpNet, issue: &str, context: &Assignment) -> String {
    let parents = net.parents.get(issue).cloned().unwrap_or_default();
    let row = net.cpt[issue]
        .iter()
        .find(|row| parents.iter().all(|p| row.condition.get(p) == context.get(p)))
        .expect("complete table");
    row.order[0].clone()
}

/// The unique yes/no assignment in which every issue's value is the majority
/// local vote given the earlier values under `order`, ties going to
/// `tie[issue]`. Found by checking all 2^p assignments.
pub fn sequential_by_enumeration(
    nets: &[CpNet],
    order: &[String],
    tie: &dyn Fn(&str) -> String,
) -> Assignment {
    let p = order.len();
    let mut consistent = Vec::new();
    for mask in 0..(1usize << p) {
        let full: Assignment = order
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), if mask >> i & 1 == 1 { "yes" } else { "no" }.to_string()))
            .collect();
        let ok = order.iter().enumerate().all(|(i, id)| {
            let prefix: Assignment = order[..i].iter().map(|k| (k.clone(), full[k].clone())).collect();
            let yes = nets.iter().filter(|n| preferred(n, id, &prefix) == "yes").count();
            let no = nets.len() - yes;
            let expect = match yes.cmp(&no) {
                std::cmp::Ordering::Greater => "yes".to_string(),
                std::cmp::Ordering::Less => "no".to_string(),
                std::cmp::Ordering::Equal => tie(id),
            };
            full[id] == expect
        });
        if ok {
            consistent.push(full);
        }
    }
    assert_eq!(consistent.len(), 1, "sequential outcome must be unique");
    consistent.pop().expect("one assignment")
}
