//! Internally vertex-disjoint s-t paths by unit-capacity max-flow. Every
//! vertex v becomes v_in -> v_out with capacity 1 (unbounded for s and t), and
//! each undirected edge becomes u_out -> v_in and v_out -> u_in.

use std::collections::VecDeque;

use super::{SimError, Topology};

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Node indices from source to destination inclusive.
    pub nodes: Vec<usize>,
    pub latency_ms: f64,
}

impl Path {
    pub fn intermediates(&self) -> &[usize] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn describe(&self, t: &Topology) -> String {
        self.nodes.iter().map(|&n| t.name(n)).collect::<Vec<_>>().join("-")
    }
}

struct Edge {
    to: usize,
    cap: usize,
    rev: usize,
    forward: bool,
}

struct FlowNet {
    graph: Vec<Vec<Edge>>,
}

impl FlowNet {
    fn add(&mut self, u: usize, v: usize, cap: usize) {
        let (ru, rv) = (self.graph[v].len(), self.graph[u].len());
        self.graph[u].push(Edge {
            to: v,
            cap,
            rev: ru,
            forward: true,
        });
        self.graph[v].push(Edge {
            to: u,
            cap: 0,
            rev: rv,
            forward: false,
        });
    }

    // One BFS augmentation of a single unit.
    fn augment(&mut self, s: usize, t: usize) -> bool {
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.graph.len()];
        let mut queue = VecDeque::from([s]);
        let mut seen = vec![false; self.graph.len()];
        seen[s] = true;
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for (i, e) in self.graph[u].iter().enumerate() {
                if e.cap > 0 && !seen[e.to] {
                    seen[e.to] = true;
                    prev[e.to] = Some((u, i));
                    queue.push_back(e.to);
                }
            }
        }
        if !seen[t] {
            return false;
        }
        let mut v = t;
        while let Some((u, i)) = prev[v] {
            self.graph[u][i].cap -= 1;
            let rev = self.graph[u][i].rev;
            self.graph[v][rev].cap += 1;
            v = u;
        }
        true
    }
}

fn endpoints(t: &Topology, src: &str, dst: &str) -> Result<(usize, usize), SimError> {
    let (s, d) = (t.node(src)?, t.node(dst)?);
    if s == d {
        return Err(SimError::SameEndpoints(src.to_string()));
    }
    Ok((s, d))
}

/// Every path of some maximum disjoint family, fastest first.
pub fn max_disjoint_paths(t: &Topology, src: &str, dst: &str) -> Result<Vec<Path>, SimError> {
    let (s, d) = endpoints(t, src, dst)?;
    let n = t.node_count();
    let (vin, vout) = (|v: usize| 2 * v, |v: usize| 2 * v + 1);
    let mut net = FlowNet {
        graph: (0..2 * n).map(|_| Vec::new()).collect(),
    };
    for v in 0..n {
        let cap = if v == s || v == d { n } else { 1 };
        net.add(vin(v), vout(v), cap);
    }
    // No arcs back into s or out of d, so the flow never loops through them.
    for &(u, v, _) in t.edges() {
        for (a, b) in [(u, v), (v, u)] {
            if b != s && a != d {
                net.add(vout(a), vin(b), 1);
            }
        }
    }
    while net.augment(vout(s), vin(d)) {}

    // Follow saturated forward arcs out of s. Internal vertices carry at most
    // one unit, so each walk is a simple path ending at d.
    let saturated = |net: &FlowNet, from: usize| -> Vec<usize> {
        net.graph[from]
            .iter()
            .filter(|e| e.forward && e.cap == 0)
            .map(|e| e.to / 2)
            .collect()
    };
    let mut paths = Vec::new();
    for first in saturated(&net, vout(s)) {
        let mut nodes = vec![s, first];
        let mut at = first;
        while at != d {
            at = saturated(&net, vout(at))[0];
            nodes.push(at);
        }
        let latency_ms = nodes.windows(2).map(|w| t.latency(w[0], w[1]).unwrap_or(0.0)).sum();
        paths.push(Path { nodes, latency_ms });
    }
    paths.sort_by(|a, b| {
        a.latency_ms
            .total_cmp(&b.latency_ms)
            .then(a.nodes.len().cmp(&b.nodes.len()))
            .then(a.nodes.cmp(&b.nodes))
    });
    Ok(paths)
}

/// `k` internally vertex-disjoint paths from `src` to `dst`, fastest first.
pub fn disjoint_paths(t: &Topology, src: &str, dst: &str, k: usize) -> Result<Vec<Path>, SimError> {
    let mut paths = max_disjoint_paths(t, src, dst)?;
    if paths.len() < k {
        return Err(SimError::NotEnoughPaths {
            requested: k,
            available: paths.len(),
        });
    }
    paths.truncate(k);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn check_paths(t: &Topology, s: usize, d: usize, paths: &[Path]) {
        let mut used = vec![false; t.node_count()];
        let mut direct = 0;
        for p in paths {
            assert_eq!((p.nodes[0], *p.nodes.last().unwrap()), (s, d));
            for w in p.nodes.windows(2) {
                assert!(t.latency(w[0], w[1]).is_some(), "{w:?} is not an edge");
            }
            if p.nodes.len() == 2 {
                direct += 1;
            }
            for &v in p.intermediates() {
                assert!(!used[v], "vertex {v} shared");
                used[v] = true;
            }
        }
        assert!(direct <= 1);
    }

    fn connected_without(t: &Topology, s: usize, d: usize, removed: &[bool], skip_direct: bool) -> bool {
        let mut seen = vec![false; t.node_count()];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in t.neighbors(u) {
                if skip_direct && ((u, v) == (s, d) || (u, v) == (d, s)) {
                    continue;
                }
                if !seen[v] && !removed[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen[d]
    }

    // Menger: the number of internally disjoint paths equals the smallest
    // vertex cut separating s from d, plus one if they are adjacent.
    fn min_cut_oracle(t: &Topology, s: usize, d: usize) -> usize {
        let n = t.node_count();
        let others: Vec<usize> = (0..n).filter(|&v| v != s && v != d).collect();
        let adjacent = t.latency(s, d).is_some() as usize;
        let mut best = others.len();
        for mask in 0u32..1 << others.len() {
            let size = mask.count_ones() as usize;
            if size >= best {
                continue;
            }
            let mut removed = vec![false; n];
            for (i, &v) in others.iter().enumerate() {
                removed[v] = mask >> i & 1 == 1;
            }
            if !connected_without(t, s, d, &removed, true) {
                best = size;
            }
        }
        best + adjacent
    }

    fn random_graph(rng: &mut impl Rng, n: usize, density: f64) -> Topology {
        let nodes: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(density) {
                    edges.push((nodes[i].clone(), nodes[j].clone(), rng.gen_range(1..20) as f64));
                }
            }
        }
        Topology::new(&nodes, &edges).unwrap()
    }

    #[test]
    fn complete_graph() {
        let t = Topology::complete(5, 3.0);
        for (s, d) in [("n0", "n4"), ("n2", "n1")] {
            let paths = disjoint_paths(&t, s, d, 4).unwrap();
            assert_eq!(paths.len(), 4);
            assert_eq!(paths[0].nodes.len(), 2);
            assert!(paths[1..].iter().all(|p| p.nodes.len() == 3));
            check_paths(&t, t.node(s).unwrap(), t.node(d).unwrap(), &paths);
        }
        assert!(matches!(
            disjoint_paths(&t, "n0", "n1", 5),
            Err(SimError::NotEnoughPaths {
                requested: 5,
                available: 4
            })
        ));
    }

    #[test]
    fn cut_vertex() {
        let t = Topology::new(&["s", "a", "t"], &[("s", "a", 1.0), ("a", "t", 1.0)]).unwrap();
        assert!(matches!(
            disjoint_paths(&t, "s", "t", 2),
            Err(SimError::NotEnoughPaths { available: 1, .. })
        ));
        assert_eq!(disjoint_paths(&t, "s", "t", 1).unwrap()[0].nodes, vec![0, 1, 2]);
    }

    #[test]
    fn bad_endpoints() {
        let t = Topology::complete(3, 1.0);
        assert!(matches!(
            disjoint_paths(&t, "n0", "zz", 1),
            Err(SimError::NodeNotFound(_))
        ));
        assert!(matches!(
            disjoint_paths(&t, "n0", "n0", 1),
            Err(SimError::SameEndpoints(_))
        ));
    }

    // Two disjoint routes exist only if the flow reroutes through the first
    // BFS path's middle edge.
    #[test]
    fn needs_flow_cancellation() {
        let t = Topology::new(
            &["s", "a", "b", "c", "d", "t"],
            &[
                ("s", "a", 1.0),
                ("a", "b", 1.0),
                ("b", "t", 1.0),
                ("s", "c", 1.0),
                ("c", "b", 1.0),
                ("a", "d", 1.0),
                ("d", "t", 1.0),
            ],
        )
        .unwrap();
        let paths = disjoint_paths(&t, "s", "t", 2).unwrap();
        check_paths(&t, 0, 5, &paths);
    }

    #[test]
    fn fastest_first() {
        let t = Topology::new(
            &["s", "a", "b", "t"],
            &[("s", "a", 9.0), ("a", "t", 9.0), ("s", "b", 1.0), ("b", "t", 1.0)],
        )
        .unwrap();
        let paths = disjoint_paths(&t, "s", "t", 2).unwrap();
        assert_eq!(paths[0].describe(&t), "s-b-t");
        assert_eq!(paths[0].latency_ms, 2.0);
        assert_eq!(disjoint_paths(&t, "s", "t", 1).unwrap()[0].describe(&t), "s-b-t");
    }

    #[test]
    fn random_graphs_match_menger() {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        for _ in 0..200 {
            let n = rng.gen_range(2..=9);
            let density = rng.gen_range(0.2..0.9);
            let t = random_graph(&mut rng, n, density);
            let paths = max_disjoint_paths(&t, "v0", &format!("v{}", n - 1)).unwrap();
            check_paths(&t, 0, n - 1, &paths);
            assert_eq!(paths.len(), min_cut_oracle(&t, 0, n - 1));
        }
    }

    proptest! {
        #[test]
        fn requested_count_or_maximum(seed in any::<u64>(), k in 1usize..6) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let t = random_graph(&mut rng, 7, 0.5);
            let max = max_disjoint_paths(&t, "v0", "v6").unwrap().len();
            match disjoint_paths(&t, "v0", "v6", k) {
                Ok(paths) => prop_assert!(paths.len() == k && k <= max),
                Err(SimError::NotEnoughPaths { available, .. }) => prop_assert!(available == max && k > max),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
