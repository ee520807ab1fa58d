//! Row-major multi-index arithmetic shared by the state operations.

/// Row-major strides for a dimension list: `strides[n] = prod(dims[n+1..])`.
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for n in (0..dims.len().saturating_sub(1)).rev() {
        s[n] = s[n + 1] * dims[n + 1];
    }
    s
}

/// Decompose a flat row-major index into per-site indices.
pub(crate) fn unravel(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut multi = vec![0usize; dims.len()];
    for n in (0..dims.len()).rev() {
        multi[n] = flat % dims[n];
        flat /= dims[n];
    }
    multi
}

/// Flat offsets contributed by every multi-index over `sub_dims`, where the
/// sites of `sub_dims` sit at `site_positions` of the full factorization with
/// the given `full_strides`. Offsets are listed in row-major order of the
/// sub-index, so `offsets[a] + offsets_other[t]` recombines disjoint groups.
pub(crate) fn group_offsets(
    sub_dims: &[usize],
    site_positions: &[usize],
    full_strides: &[usize],
) -> Vec<usize> {
    let count: usize = sub_dims.iter().product();
    (0..count)
        .map(|flat| {
            unravel(flat, sub_dims)
                .iter()
                .zip(site_positions)
                .map(|(&i, &pos)| i * full_strides[pos])
                .sum()
        })
        .collect()
}
