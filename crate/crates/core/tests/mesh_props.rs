use convexshape::mesh::{
    deformation_quality, extract_boundary, generate_primitive, load_mesh, polygon_mesh, uniform_refine,
    write_mesh, Primitive, SimplicialMesh, VectorFieldP1,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Primitive with interior vertices jittered by a fraction of the local mesh
/// size, so the mesh stays valid.
fn jittered(seed: u64) -> SimplicialMesh {
    let mut rng = StdRng::seed_from_u64(seed);
    let kind = [Primitive::UnitDisk, Primitive::UnitSquare, Primitive::UnitCubeCentered][rng.gen_range(0..3)];
    let level = if kind == Primitive::UnitCubeCentered { rng.gen_range(0..=2) } else { rng.gen_range(0..=3) };
    let mesh = generate_primitive(kind, level).unwrap();
    let b = extract_boundary(&mesh).unwrap();
    let h = mesh.diameter() / 2f64.powi(level as i32 + 2);
    let d = mesh.dim();
    let mut coords = mesh.coords().to_vec();
    for v in 0..mesh.num_vertices() {
        if !b.is_boundary(v) {
            for k in 0..d {
                coords[v * d + k] += rng.gen_range(-0.2..0.2) * h;
            }
        }
    }
    mesh.with_coords(coords).unwrap()
}

fn star_polygon(seed: u64) -> Vec<[f64; 2]> {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(3..=12);
    (0..n)
        .map(|i| {
            let a = (i as f64 + rng.gen_range(-0.3..0.3)) * std::f64::consts::TAU / n as f64;
            let r = rng.gen_range(0.5..1.5);
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn file_round_trip_is_exact(seed in any::<u64>()) {
        let m = jittered(seed);
        let back = load_mesh(&write_mesh(&m)).unwrap();
        prop_assert_eq!(back.coords(), m.coords());
        prop_assert_eq!(back.cell_indices(), m.cell_indices());
    }

    #[test]
    fn boundary_normals_close_up(seed in any::<u64>()) {
        let m = jittered(seed);
        let b = extract_boundary(&m).unwrap();
        let mut s = [0.0; 3];
        for (n, a) in b.facet_normals.iter().zip(&b.facet_measures) {
            for k in 0..3 {
                s[k] += n[k] * a;
            }
        }
        prop_assert!(s.iter().all(|x| x.abs() < 1e-12), "{:?}", s);
    }

    #[test]
    fn refinement_keeps_volume_and_boundary_order(seed in any::<u64>()) {
        let m = polygon_mesh(&star_polygon(seed)).unwrap();
        let r = uniform_refine(&m).unwrap();
        prop_assert!((r.volume() - m.volume()).abs() < 1e-13 * m.volume().max(1.0));
        prop_assert_eq!(r.num_cells(), 4 * m.num_cells());
        let old: Vec<usize> = extract_boundary(&m).unwrap().loop_vertices().unwrap().to_vec();
        let new_loop = extract_boundary(&r).unwrap().loop_vertices().unwrap().to_vec();
        prop_assert_eq!(new_loop.len(), 2 * old.len());
        let kept: Vec<usize> = new_loop.iter().copied().filter(|&v| v < m.num_vertices()).collect();
        let start = kept.iter().position(|&v| v == old[0]).unwrap();
        let rotated: Vec<usize> = kept[start..].iter().chain(&kept[..start]).copied().collect();
        prop_assert_eq!(rotated, old);
    }

    #[test]
    fn tetra_refinement_keeps_volume(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = generate_primitive(Primitive::UnitCubeCentered, rng.gen_range(0..=1)).unwrap();
        let coords: Vec<f64> = m.coords().iter().map(|x| x * rng.gen_range(0.8..1.2)).collect();
        let m = m.with_coords(coords).unwrap();
        let r = uniform_refine(&m).unwrap();
        prop_assert!((r.volume() - m.volume()).abs() < 1e-13);
        prop_assert!((0..r.num_cells()).all(|c| r.cell_volume(c) > 0.0));
    }

    #[test]
    fn zero_step_is_identity(seed in any::<u64>()) {
        let m = jittered(seed);
        let mut rng = StdRng::seed_from_u64(seed ^ 1);
        let v = VectorFieldP1::from_values(&m, (0..m.coords().len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let q = deformation_quality(&m, &v, 0.0);
        prop_assert!(q.pass && q.min_det == 1.0 && q.max_det == 1.0 && q.max_norm == 0.0);
    }
}
