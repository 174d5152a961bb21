//! Brute-force reference counters, written without reference to the library's
//! scanning order.

use std::collections::BTreeMap;

use patchtex::features::{Angle, Connectivity, CooccurrenceMatrix, RunLengthMatrix, SizeZoneMatrix};
use patchtex::imaging::GrayImage;

fn offset(theta: Angle) -> (i64, i64) {
    match theta.degrees() {
        0 => (0, 1),
        45 => (-1, 1),
        90 => (-1, 0),
        135 => (-1, -1),
        d => panic!("no such angle {d}"),
    }
}

/// Normalized symmetric co-occurrence table from every ordered pixel pair.
pub fn glcm_by_pairs(img: &GrayImage, levels: usize, d: usize, theta: Angle) -> Vec<f64> {
    let (dr, dc) = offset(theta);
    let (dr, dc) = (dr * d as i64, dc * d as i64);
    let coords: Vec<(i64, i64)> = (0..img.height() as i64)
        .flat_map(|r| (0..img.width() as i64).map(move |c| (r, c)))
        .collect();
    let mut counts = vec![0u64; levels * levels];
    for &(r1, c1) in &coords {
        for &(r2, c2) in &coords {
            let (er, ec) = (r2 - r1, c2 - c1);
            if (er, ec) == (dr, dc) || (er, ec) == (-dr, -dc) {
                let a = img.get(r1 as usize, c1 as usize) as usize;
                let b = img.get(r2 as usize, c2 as usize) as usize;
                counts[a * levels + b] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&n| n as f64 / total as f64).collect()
}

pub fn glcm_matches(m: &CooccurrenceMatrix, oracle: &[f64]) -> bool {
    let l = m.levels();
    (0..l).all(|i| (0..l).all(|j| m.get(i, j) == oracle[i * l + j]))
}

/// Pixel sequences along every line in direction `theta`.
fn lines(img: &GrayImage, theta: Angle) -> Vec<Vec<u8>> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let key = |r: i64, c: i64| -> i64 {
        match theta.degrees() {
            0 => r,
            90 => c,
            45 => r + c,
            _ => r - c,
        }
    };
    let mut groups: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
    for r in 0..h {
        for c in 0..w {
            groups.entry(key(r, c)).or_default().push((r, c));
        }
    }
    groups
        .into_values()
        .map(|mut pts| {
            // order along the line; row-major order works for every direction
            pts.sort();
            pts.iter().map(|&(r, c)| img.get(r as usize, c as usize)).collect()
        })
        .collect()
}

/// Map `(level, run length) -> count` of maximal runs.
pub fn runs_by_lines(img: &GrayImage, theta: Angle) -> BTreeMap<(usize, usize), u64> {
    let mut out = BTreeMap::new();
    for line in lines(img, theta) {
        let mut i = 0;
        while i < line.len() {
            let mut j = i;
            while j < line.len() && line[j] == line[i] {
                j += 1;
            }
            *out.entry((line[i] as usize, j - i)).or_insert(0) += 1;
            i = j;
        }
    }
    out
}

pub fn glrlm_matches(m: &RunLengthMatrix, oracle: &BTreeMap<(usize, usize), u64>) -> bool {
    let mut seen = BTreeMap::new();
    for level in 0..m.levels() {
        for run in 0..m.max_run() {
            let n = m.get(level, run);
            if n > 0 {
                seen.insert((level, run + 1), n);
            }
        }
    }
    &seen == oracle
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Map `(level, zone size) -> count`, via union-find over all adjacent pairs.
pub fn zones_by_union_find(img: &GrayImage, connectivity: Connectivity) -> BTreeMap<(usize, usize), u64> {
    let (w, n) = (img.width(), img.len());
    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in a + 1..n {
            let (dr, dc) = (
                (a / w) as i64 - (b / w) as i64,
                (a % w) as i64 - (b % w) as i64,
            );
            let adjacent = match connectivity {
                Connectivity::Four => dr.abs() + dc.abs() == 1,
                Connectivity::Eight => dr.abs().max(dc.abs()) == 1,
            };
            if adjacent && img.pixels()[a] == img.pixels()[b] {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut sizes: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for p in 0..n {
        let root = find(&mut parent, p);
        sizes.entry(root).or_insert((img.pixels()[p] as usize, 0)).1 += 1;
    }
    let mut out = BTreeMap::new();
    for (level, size) in sizes.into_values() {
        *out.entry((level, size)).or_insert(0) += 1;
    }
    out
}

pub fn glszm_matches(m: &SizeZoneMatrix, oracle: &BTreeMap<(usize, usize), u64>) -> bool {
    let mut seen = BTreeMap::new();
    for level in 0..m.levels() {
        for size in 0..m.max_zone() {
            let n = m.get(level, size);
            if n > 0 {
                seen.insert((level, size + 1), n);
            }
        }
    }
    &seen == oracle
}
