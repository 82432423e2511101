#![allow(dead_code)]

use hyperspec::graph::{Graph, GraphBuilder, Hyperrectangle, Matrix, NodeId};
use hyperspec::specs::{Direction, SpecKind, SpecParams};
use rand::{Rng, RngExt};

/// Fully connected ReLU network with the given layer widths; no ReLU after
/// the last layer. Weights and biases are uniform in `[-1, 1]`.
pub fn random_mlp<R: Rng + ?Sized>(rng: &mut R, widths: &[usize]) -> Graph {
    let mut b = GraphBuilder::new();
    let mut x = b.input(widths[0]).unwrap();
    for (k, pair) in widths.windows(2).enumerate() {
        let (cols, rows) = (pair[0], pair[1]);
        let weight: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let bias: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..=1.0)).collect();
        x = b.affine(x, Matrix::new(rows, cols, weight).unwrap(), bias).unwrap();
        if k + 2 < widths.len() {
            x = b.relu(x).unwrap();
        }
    }
    b.finish(x).unwrap()
}

/// `x -> W x + b`.
pub fn linear(rows: &[Vec<f64>], bias: Vec<f64>) -> Graph {
    let mut b = GraphBuilder::new();
    let x = b.input(rows[0].len()).unwrap();
    let y = b.affine(x, Matrix::from_rows(rows).unwrap(), bias).unwrap();
    b.finish(y).unwrap()
}

pub fn scalar(w: f64, c: f64) -> Graph {
    linear(&[vec![w]], vec![c])
}

pub fn unit_box(n: usize) -> Hyperrectangle {
    Hyperrectangle::uniform(n, 0.0, 1.0).unwrap()
}

pub fn random_box<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Hyperrectangle {
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.random_range(-2.0..=2.0);
        let w: f64 = rng.random_range(0.0..=1.5);
        lo.push(a);
        hi.push(a + w);
    }
    Hyperrectangle::new(lo, hi).unwrap()
}

/// Outputs a network needs for `kind` when it has `classes` ordinary outputs.
pub fn outputs_for(kind: SpecKind, classes: usize) -> usize {
    match kind {
        SpecKind::RobustnessExtraClass => classes.max(1) + 1,
        SpecKind::DependencyFairness => classes.max(2),
        _ => classes,
    }
}

/// Random parameters for `kind` on the unit box of dimension `n`. Fairness
/// uses the first input as the sensitive attribute.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R, kind: SpecKind, n: usize, m: usize) -> SpecParams {
    let direction = if rng.random_bool(0.5) { Direction::NonIncreasing } else { Direction::NonDecreasing };
    let p = SpecParams::new(unit_box(n), m)
        .with_monotone(rng.random_range(0..n), rng.random_range(0..m), direction)
        .with_robustness(rng.random_range(0.05..=0.3), rng.random_range(0.05..=0.5))
        .with_lipschitz(rng.random_range(0.2..=2.0));
    if kind == SpecKind::DependencyFairness {
        p.with_fairness(2, 0)
    } else {
        p
    }
}

/// Random DAG over every node kind with input dimension `n`. Every node
/// feeds the sink, which has two outputs.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, steps: usize) -> Graph {
    let mut b = GraphBuilder::new();
    let x = b.input(n).unwrap();
    let mut pool = vec![(x, n)];
    let mut used = vec![false];
    fn pick<R: Rng + ?Sized>(rng: &mut R, pool: &[(NodeId, usize)], used: &mut [bool]) -> (NodeId, usize) {
        let k = rng.random_range(0..pool.len());
        used[k] = true;
        pool[k]
    }
    let fresh = |rng: &mut R, rows: usize, cols: usize| {
        let w = (0..rows * cols).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let bias = (0..rows).map(|_| rng.random_range(-0.5..=0.5)).collect();
        (Matrix::new(rows, cols, w).unwrap(), bias)
    };
    for _ in 0..steps {
        let (a, da) = pick(rng, &pool, &mut used);
        let out = match rng.random_range(0..13) {
            0 | 1 => {
                let rows = rng.random_range(1..=4);
                let (w, bias) = fresh(rng, rows, da);
                b.affine(a, w, bias).unwrap()
            }
            2 | 3 => b.relu(a).unwrap(),
            k @ 4..=7 => {
                let (c, dc) = pick(rng, &pool, &mut used);
                let (w, bias) = fresh(rng, da, dc);
                let c = b.affine(c, w, bias).unwrap();
                used.push(true);
                pool.push((c, da));
                match k {
                    4 => b.add(a, c),
                    5 => b.sub(a, c),
                    6 => b.max_node(a, c),
                    _ => b.min_node(a, c),
                }
                .unwrap()
            }
            8 => {
                if rng.random_bool(0.5) {
                    b.neg(a).unwrap()
                } else {
                    b.scale(a, rng.random_range(-2.0..=2.0)).unwrap()
                }
            }
            9 => {
                let (c, _) = pick(rng, &pool, &mut used);
                b.concat(&[a, c]).unwrap()
            }
            10 => {
                let start = rng.random_range(0..da);
                let end = rng.random_range(start + 1..=da);
                if rng.random_bool(0.5) {
                    b.slice(a, start, end).unwrap()
                } else {
                    let idx = (0..rng.random_range(1..=3)).map(|_| rng.random_range(0..da)).collect();
                    b.select(a, idx).unwrap()
                }
            }
            11 => {
                let lo: Vec<f64> = (0..da).map(|_| rng.random_range(-1.0..=0.5)).collect();
                let hi = lo.iter().map(|l| l + rng.random_range(0.0..=1.0)).collect();
                b.clamp(a, lo, hi).unwrap()
            }
            _ => b.reduce_max(a).unwrap(),
        };
        let d = b.dim(out).unwrap();
        used.push(false);
        pool.push((out, d));
    }
    let open: Vec<NodeId> = pool.iter().zip(&used).filter(|(_, u)| !**u).map(|(p, _)| p.0).collect();
    let tail = if open.len() == 1 { open[0] } else { b.concat(&open).unwrap() };
    let (w, bias) = fresh(rng, 2, b.dim(tail).unwrap());
    let sink = b.affine(tail, w, bias).unwrap();
    b.finish(sink).unwrap()
}
