//! Square-zero classes, well-ordering, the ℚ-trivial decomposition tower
//! and its blocks.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::iso::{all_vectors, sq_generator};
use crate::moves::{switch, Move};
use crate::ring::{product2, BottMatrix, Class2};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareZeroGenerator {
    pub index: usize,
    /// `2x_i - alpha_i`.
    pub gen: Class2,
    /// `gen`, halved when all of its coefficients are even.
    pub primitive: Class2,
}

/// One generator per `i` with `alpha_i^2 = 0`, ascending in `i`.
pub fn square_zero_generators(a: &BottMatrix) -> Vec<SquareZeroGenerator> {
    (1..=a.n())
        .filter(|&i| a.alpha_square_zero(i))
        .map(|i| {
            let gen = sq_generator(a, i);
            let primitive = primitive_part(&gen);
            SquareZeroGenerator {
                index: i,
                gen,
                primitive,
            }
        })
        .collect()
}

fn primitive_part(c: &Class2) -> Class2 {
    if c.is_even() && !c.is_zero() {
        c.div_exact(&BigInt::from(2)).expect("even")
    } else {
        c.clone()
    }
}

/// Every nonzero `z` with coefficients in `[-bound, bound]` and `z^2 = 0`,
/// in ascending order.
pub fn square_zero_bruteforce(a: &BottMatrix, bound: u32) -> Vec<Class2> {
    if bound == 0 {
        return Vec::new();
    }
    let mut out: Vec<Class2> = all_vectors(a.n(), i64::from(bound))
        .into_iter()
        .filter(|z| !z.is_zero() && product2(z, z, a).is_zero())
        .collect();
    out.sort();
    out
}

fn square_flags(a: &BottMatrix, offset: usize) -> Vec<bool> {
    if offset == 0 {
        (1..=a.n()).map(|i| a.alpha_square_zero(i)).collect()
    } else {
        let bar = a.sub_bar(offset).expect("offset < n");
        (1..=bar.n()).map(|i| bar.alpha_square_zero(i)).collect()
    }
}

/// Bubbles square-zero rows of the block below `offset` to the front by
/// adjacent switches. Returns the switches performed.
fn bubble(a: &BottMatrix, offset: usize) -> Result<(BottMatrix, Vec<Move>)> {
    let mut cur = a.clone();
    let mut moves = Vec::new();
    loop {
        let flags = square_flags(&cur, offset);
        let Some(p) = (0..flags.len().saturating_sub(1)).find(|&p| !flags[p] && flags[p + 1])
        else {
            return Ok((cur, moves));
        };
        let j = offset + p + 1;
        let mv = switch(&cur, j).map_err(|e| match e {
            Error::SwitchBlocked { j, entry } => Error::WellOrderFailure { j, entry },
            other => other,
        })?;
        cur = mv.after.clone();
        moves.push(mv);
    }
}

/// Whether `alpha_j^2 = 0` implies `alpha_i^2 = 0` for all `i < j`.
pub fn is_well_ordered(a: &BottMatrix) -> bool {
    let flags = square_flags(a, 0);
    flags.windows(2).all(|w| w[0] || !w[1])
}

/// Reorders `a` by switches so that the square-zero `alpha_i` come first.
pub fn well_order(a: &BottMatrix) -> Result<(BottMatrix, Vec<Move>)> {
    bubble(a, 0)
}

/// The tower of ℚ-trivial fibrations obtained after well-ordering.
///
/// `dims[s-1]` is the height of stage `s` in the base matrix. The source
/// matrix is related to `base` by `moves_applied`, which only permute
/// generators; `index_level` reports levels in source coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionTower {
    source: BottMatrix,
    pub base: BottMatrix,
    pub dims: Vec<usize>,
    pub moves_applied: Vec<Move>,
    /// `to_base[i-1]` is the base position of source generator `x_i`.
    to_base: Vec<usize>,
}

impl DecompositionTower {
    pub fn source(&self) -> &BottMatrix {
        &self.source
    }

    pub fn stages(&self) -> usize {
        self.dims.len()
    }

    /// Position of source generator `x_i` in the base matrix.
    pub fn base_index(&self, i: usize) -> usize {
        self.to_base[i - 1]
    }

    /// Source generator sitting at base position `r`.
    pub fn source_index(&self, r: usize) -> usize {
        self.to_base
            .iter()
            .position(|&p| p == r)
            .expect("permutation")
            + 1
    }

    /// Stage containing base position `r` (`0` for `r = 0`).
    pub fn position_level(&self, r: usize) -> usize {
        if r == 0 {
            return 0;
        }
        self.dims.iter().position(|&d| r <= d).expect("r <= n") + 1
    }

    /// Level of the source generator `x_i`.
    pub fn index_level(&self, i: usize) -> usize {
        self.position_level(self.base_index(i))
    }

    /// Level of a class written in source coordinates.
    pub fn source_level(&self, c: &Class2) -> usize {
        (1..=c.n())
            .filter(|&i| !c.coeff(i).is_zero())
            .map(|i| self.index_level(i))
            .max()
            .unwrap_or(0)
    }

    /// `d_{s}`, with `d_0 = 0`.
    pub fn dim(&self, s: usize) -> usize {
        if s == 0 {
            0
        } else {
            self.dims[s - 1]
        }
    }
}

/// Well-orders stage by stage, peeling off the largest ℚ-trivial base.
pub fn decompose_tower(a: &BottMatrix) -> Result<DecompositionTower> {
    let n = a.n();
    let mut cur = a.clone();
    let mut moves = Vec::new();
    let mut dims = Vec::new();
    let mut at: Vec<usize> = (1..=n).collect(); // base position -> source index
    let mut done = 0;
    while done < n {
        let (next, switches) = bubble(&cur, done)?;
        for mv in &switches {
            let j = mv.kind.j();
            at.swap(j - 1, j);
        }
        moves.extend(switches);
        cur = next;
        let flags = square_flags(&cur, done);
        let k = flags.iter().take_while(|&&f| f).count();
        debug_assert!(k >= 1, "the first row of every block is zero");
        done += k;
        dims.push(done);
    }
    let mut to_base = vec![0; n];
    for (p, &src) in at.iter().enumerate() {
        to_base[src - 1] = p + 1;
    }
    Ok(DecompositionTower {
        source: a.clone(),
        base: cur,
        dims,
        moves_applied: moves,
        to_base,
    })
}

/// Smallest stage containing `c`, a class written in base coordinates.
pub fn level(c: &Class2, tower: &DecompositionTower) -> usize {
    tower.position_level(c.height())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockStructure {
    pub level: usize,
    /// Mod-2 reduction of `z_r` per source index `r`, in source coordinates.
    pub reps: BTreeMap<usize, Vec<u8>>,
    /// Source indices grouped by equal representative, each sorted, ordered
    /// by smallest member.
    pub classes: Vec<Vec<usize>>,
}

impl BlockStructure {
    pub fn class_of(&self, i: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&i))
    }
}

/// Blocks at `level`: `z_r` is `2x_r - alpha_r` with the terms of lower
/// stages dropped, halved when imprimitive; indices are grouped by `z_r`
/// mod 2.
pub fn blocks_at(
    a: &BottMatrix,
    tower: &DecompositionTower,
    level: usize,
) -> Result<BlockStructure> {
    if tower.source() != a {
        return Err(Error::ContextMismatch);
    }
    if level == 0 || level > tower.stages() {
        return Err(Error::Range {
            index: level,
            expected: format!("1 <= level <= {}", tower.stages()),
        });
    }
    let n = a.n();
    let k = tower.dim(level - 1);
    let mut reps = BTreeMap::new();
    for r in k + 1..=tower.dim(level) {
        let z = primitive_part(&sq_generator(&tower.base, r).drop_lower(k));
        let base_bits = z.mod2();
        let mut bits = vec![0u8; n];
        for i in 1..=n {
            bits[i - 1] = base_bits[tower.base_index(i) - 1];
        }
        reps.insert(tower.source_index(r), bits);
    }
    let mut groups: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
    for (&i, bits) in &reps {
        groups.entry(bits.clone()).or_default().push(i);
    }
    let mut classes: Vec<Vec<usize>> = groups.into_values().collect();
    for c in &mut classes {
        c.sort_unstable();
    }
    classes.sort();
    Ok(BlockStructure {
        level,
        reps,
        classes,
    })
}

/// Whether `i` and `j` are at the same level and in the same block.
pub fn same_block(a: &BottMatrix, i: usize, j: usize) -> bool {
    match decompose_tower(a) {
        Ok(t) => same_block_in(a, &t, i, j),
        Err(_) => false,
    }
}

pub fn same_block_in(a: &BottMatrix, tower: &DecompositionTower, i: usize, j: usize) -> bool {
    let l = tower.index_level(i);
    if l != tower.index_level(j) {
        return false;
    }
    match blocks_at(a, tower, l) {
        Ok(b) => b.class_of(i).is_some() && b.class_of(i) == b.class_of(j),
        Err(_) => false,
    }
}

/// Every block across all levels, in source indices.
pub fn all_blocks(a: &BottMatrix, tower: &DecompositionTower) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for l in 1..=tower.stages() {
        out.extend(blocks_at(a, tower, l)?.classes);
    }
    out.sort();
    Ok(out)
}

/// Block sizes, descending, when every `alpha_i^2` vanishes; `None` otherwise.
pub fn qtrivial_partition(a: &BottMatrix) -> Option<Vec<usize>> {
    if !(1..=a.n()).all(|i| a.alpha_square_zero(i)) {
        return None;
    }
    let tower = decompose_tower(a).ok()?;
    let blocks = blocks_at(a, &tower, 1).ok()?;
    let mut sizes: Vec<usize> = blocks.classes.iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|x, y| y.cmp(x));
    Some(sizes)
}
