//! Vertex sets of the symmetric polytopes used as qubit measurements.
//!
//! Coordinates are the standard exact embeddings (golden-ratio forms for the
//! icosahedral family), each closed under the rotation group of the solid,
//! normalized to the unit sphere.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Solid {
    Tetrahedron,
    Octahedron,
    Cube,
    Cuboctahedron,
    Icosahedron,
    Dodecahedron,
    Icosidodecahedron,
}

impl Solid {
    pub const ALL: [Solid; 7] = [
        Solid::Octahedron,
        Solid::Tetrahedron,
        Solid::Cube,
        Solid::Cuboctahedron,
        Solid::Icosahedron,
        Solid::Dodecahedron,
        Solid::Icosidodecahedron,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Solid::Tetrahedron => "tetrahedron",
            Solid::Octahedron => "octahedron",
            Solid::Cube => "cube",
            Solid::Cuboctahedron => "cuboctahedron",
            Solid::Icosahedron => "icosahedron",
            Solid::Dodecahedron => "dodecahedron",
            Solid::Icosidodecahedron => "icosidodecahedron",
        }
    }

    pub fn vertex_count(self) -> usize {
        match self {
            Solid::Tetrahedron => 4,
            Solid::Octahedron => 6,
            Solid::Cube => 8,
            Solid::Cuboctahedron | Solid::Icosahedron => 12,
            Solid::Dodecahedron => 20,
            Solid::Icosidodecahedron => 30,
        }
    }

    /// Unit vertices, in a fixed canonical order.
    pub fn vertices(self) -> Vec<[f64; 3]> {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let raw: Vec<[f64; 3]> = match self {
            Solid::Tetrahedron => vec![
                [1.0, 1.0, 1.0],
                [1.0, -1.0, -1.0],
                [-1.0, 1.0, -1.0],
                [-1.0, -1.0, 1.0],
            ],
            Solid::Octahedron => vec![
                [0.0, 0.0, 1.0],
                [0.0, 0.0, -1.0],
                [1.0, 0.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, -1.0, 0.0],
            ],
            Solid::Cube => signs3().collect(),
            Solid::Cuboctahedron => {
                let mut v = Vec::new();
                for [a, b] in signs2() {
                    v.push([a, b, 0.0]);
                    v.push([a, 0.0, b]);
                    v.push([0.0, a, b]);
                }
                v
            }
            Solid::Icosahedron => {
                let mut v = Vec::new();
                for [a, b] in signs2() {
                    v.extend(cyclic([0.0, a, b * phi]));
                }
                v
            }
            Solid::Dodecahedron => {
                let mut v: Vec<[f64; 3]> = signs3().collect();
                for [a, b] in signs2() {
                    v.extend(cyclic([0.0, a / phi, b * phi]));
                }
                v
            }
            Solid::Icosidodecahedron => {
                let mut v = Vec::new();
                for s in [1.0, -1.0] {
                    v.extend(cyclic([0.0, 0.0, s * phi]));
                }
                for [a, b, c] in signs3() {
                    v.extend(cyclic([a * 0.5, b * phi / 2.0, c * phi * phi / 2.0]));
                }
                v
            }
        };
        debug_assert_eq!(raw.len(), self.vertex_count());
        raw.into_iter()
            .map(|p| {
                let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                [p[0] / n, p[1] / n, p[2] / n]
            })
            .collect()
    }

    /// Outcome labels; the octahedron uses the spin-direction names.
    pub fn labels(self) -> Vec<String> {
        match self {
            Solid::Octahedron => ["z+", "z-", "x+", "x-", "y+", "y-"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            _ => (0..self.vertex_count()).map(|i| format!("v{i}")).collect(),
        }
    }
}

fn signs2() -> impl Iterator<Item = [f64; 2]> {
    [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]].into_iter()
}

fn signs3() -> impl Iterator<Item = [f64; 3]> {
    (0..8).map(|i| {
        let s = |bit: usize| if i & bit == 0 { 1.0 } else { -1.0 };
        [s(4), s(2), s(1)]
    })
}

/// The three cyclic permutations of a coordinate triple.
fn cyclic(p: [f64; 3]) -> [[f64; 3]; 3] {
    [p, [p[1], p[2], p[0]], [p[2], p[0], p[1]]]
}

impl fmt::Display for Solid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.trim().to_ascii_lowercase();
        match key.as_str() {
            "sic" => return Ok(Solid::Tetrahedron),
            "octa" => return Ok(Solid::Octahedron),
            _ => {}
        }
        Solid::ALL
            .into_iter()
            .find(|solid| solid.name() == key)
            .ok_or_else(|| Error::UnknownSolid(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_sets_are_distinct_unit_and_balanced() {
        for solid in Solid::ALL {
            let v = solid.vertices();
            assert_eq!(v.len(), solid.vertex_count());
            let mut sum = [0.0; 3];
            for (i, p) in v.iter().enumerate() {
                let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                assert!((n - 1.0).abs() < 1e-14);
                for q in &v[i + 1..] {
                    let d: f64 = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum();
                    assert!(d > 1e-3, "{solid}: duplicate vertex");
                }
                (0..3).for_each(|k| sum[k] += p[k]);
            }
            assert!(sum.iter().all(|s| s.abs() < 1e-12), "{solid}");
        }
    }

    #[test]
    fn parses_names_and_aliases() {
        assert_eq!("SIC".parse::<Solid>().unwrap(), Solid::Tetrahedron);
        assert_eq!(
            "icosidodecahedron".parse::<Solid>().unwrap(),
            Solid::Icosidodecahedron
        );
        assert!(matches!(
            "prism".parse::<Solid>(),
            Err(Error::UnknownSolid(_))
        ));
    }
}
