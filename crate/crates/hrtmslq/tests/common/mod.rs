//! Helpers shared by the integration suites.

use hrtmslq::instances::Graph;

/// All ordered set partitions of `0..k` (every tiered preference order).
pub fn ordered_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut acc: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for x in 0..k {
        let mut next = Vec::new();
        for partition in &acc {
            for t in 0..partition.len() {
                let mut p = partition.clone();
                p[t].push(x);
                next.push(p);
            }
            for pos in 0..=partition.len() {
                let mut p = partition.clone();
                p.insert(pos, vec![x]);
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// Every labeled connected graph with `2..=max_v` vertices, at least one
/// edge and at most `max_e` edges.
pub fn connected_graphs(max_v: usize, max_e: usize) -> Vec<Graph> {
    let mut out = Vec::new();
    for v in 2..=max_v {
        let all_pairs: Vec<(usize, usize)> = (0..v)
            .flat_map(|a| ((a + 1)..v).map(move |b| (a, b)))
            .collect();
        for mask in 1u32..(1 << all_pairs.len()) {
            let count = mask.count_ones() as usize;
            if count > max_e || count + 1 < v {
                continue;
            }
            let edges: Vec<(usize, usize)> = all_pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &e)| e)
                .collect();
            let g = Graph::new(v, edges).unwrap();
            if g.is_connected() {
                out.push(g);
            }
        }
    }
    out
}
