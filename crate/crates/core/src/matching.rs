//! Maximum-cardinality bipartite matching (Hopcroft–Karp).

const NONE: u32 = u32::MAX;
const INF: u32 = u32::MAX;

/// Bipartite graph in compressed adjacency form. Left vertices are
/// `0..left`, right vertices `0..right`.
#[derive(Debug, Clone)]
pub struct Bipartite {
    left: usize,
    right: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Bipartite {
    /// Builds the graph from per-left-vertex neighbour lists produced by `adj`.
    pub fn from_fn(left: usize, right: usize, mut adj: impl FnMut(usize, &mut Vec<u32>)) -> Self {
        assert!(right < NONE as usize && left < NONE as usize);
        let mut offsets = Vec::with_capacity(left + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for u in 0..left {
            adj(u, &mut targets);
            offsets.push(targets.len());
        }
        Bipartite {
            left,
            right,
            offsets,
            targets,
        }
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    fn adj(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }
}

/// Returns `mate[u]` for every left vertex.
pub fn hopcroft_karp(g: &Bipartite) -> Vec<Option<usize>> {
    let mut mate_l = vec![NONE; g.left];
    let mut mate_r = vec![NONE; g.right];
    let mut dist = vec![INF; g.left];
    let mut queue = Vec::with_capacity(g.left);
    let mut iter = vec![0usize; g.left];
    let mut stack: Vec<(u32, u32)> = Vec::new();

    loop {
        // Layering.
        queue.clear();
        for u in 0..g.left {
            if mate_l[u] == NONE {
                dist[u] = 0;
                queue.push(u as u32);
            } else {
                dist[u] = INF;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head] as usize;
            head += 1;
            for &v in g.adj(u) {
                let w = mate_r[v as usize];
                if w == NONE {
                    found = true;
                } else if dist[w as usize] == INF {
                    dist[w as usize] = dist[u] + 1;
                    queue.push(w);
                }
            }
        }
        if !found {
            break;
        }

        // Vertex-disjoint shortest augmenting paths, iterative DFS.
        iter.iter_mut().for_each(|i| *i = 0);
        for root in 0..g.left {
            if mate_l[root] != NONE {
                continue;
            }
            stack.clear();
            stack.push((root as u32, NONE));
            while let Some(&(x, _)) = stack.last() {
                let xu = x as usize;
                let adj = g.adj(xu);
                if iter[xu] == adj.len() {
                    dist[xu] = INF;
                    stack.pop();
                    continue;
                }
                let v = adj[iter[xu]];
                iter[xu] += 1;
                let w = mate_r[v as usize];
                if w == NONE {
                    // Augment: the top uses `v`, each lower entry uses the
                    // right vertex recorded by the entry above it.
                    let mut right = v;
                    for i in (0..stack.len()).rev() {
                        let (l, via) = stack[i];
                        mate_l[l as usize] = right;
                        mate_r[right as usize] = l;
                        right = via;
                    }
                    break;
                } else if dist[w as usize] == dist[xu].wrapping_add(1) {
                    stack.push((w, v));
                }
            }
        }
    }

    mate_l
        .into_iter()
        .map(|v| (v != NONE).then_some(v as usize))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(left: usize, edges: &[(usize, usize)]) -> usize {
        // Exhaustive over edge subsets; tiny graphs only.
        let mut best = 0;
        for mask in 0u32..(1 << edges.len()) {
            let mut used_l = vec![false; left];
            let mut used_r = [false; 16];
            let mut ok = true;
            for (i, &(u, v)) in edges.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    if used_l[u] || used_r[v] {
                        ok = false;
                        break;
                    }
                    used_l[u] = true;
                    used_r[v] = true;
                }
            }
            if ok {
                best = best.max(mask.count_ones() as usize);
            }
        }
        best
    }

    #[test]
    fn matches_brute_force_on_small_graphs() {
        let mut state = 12345u64;
        for _ in 0..200 {
            let left = 5;
            let right = 5;
            let mut edges = Vec::new();
            for u in 0..left {
                for v in 0..right {
                    state = crate::hardgen::mix64(state);
                    if state % 3 == 0 {
                        edges.push((u, v));
                    }
                }
            }
            edges.truncate(14);
            let g = Bipartite::from_fn(left, right, |u, out| {
                out.extend(edges.iter().filter(|e| e.0 == u).map(|e| e.1 as u32))
            });
            let mate = hopcroft_karp(&g);
            let size = mate.iter().flatten().count();
            assert_eq!(size, brute_force(left, &edges));
            // Matching is valid.
            let mut seen = vec![false; right];
            for (u, m) in mate.iter().enumerate() {
                if let Some(v) = *m {
                    assert!(edges.contains(&(u, v)));
                    assert!(!seen[v]);
                    seen[v] = true;
                }
            }
        }
    }

    #[test]
    fn long_augmenting_path() {
        // A path graph forces a long alternating path once greedy choices are made.
        let n = 50_000;
        let g = Bipartite::from_fn(n, n, |u, out| {
            out.push(u as u32);
            if u + 1 < n {
                out.push(u as u32 + 1);
            }
        });
        let mate = hopcroft_karp(&g);
        assert_eq!(mate.iter().flatten().count(), n);
    }
}
