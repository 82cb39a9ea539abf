use nalgebra::DVector;
use skewbrane::constructions::{GraphSphere, SkewSphere};
use skewbrane::grassmann::{parallel_defect, OrientedPlane};

fn main() {
    let s = SkewSphere {
        n: 2,
        eps: 0.01,
        coeffs: vec![1.0, 2.0],
    };
    for grid in [11usize, 13, 15, 17] {
        match s.epsilon_budget(grid) {
            Ok(b) => println!(
                "grid {grid}: eps_max={:.6} a={:.4} C={:.4} b={:.4} locus={}",
                b.eps_max, b.a, b.c, b.b, b.zero_locus_size
            ),
            Err(e) => println!("grid {grid}: {e}"),
        }
    }
    // where is the minimum?
    let dom = skewbrane::domain::ParamDomain::sphere(4);
    let pts = dom.sphere_grid(13).unwrap();
    let mut worst = (f64::INFINITY, DVector::zeros(4));
    for x in &pts {
        let w0 = s.f_ev_jet(x).g;
        let v = s.v_field(x);
        let aq = v.norm_squared() - 1.0;
        let bq = -2.0 * w0.dot(&v);
        let cq = w0.norm_squared();
        let disc = bq * bq - 4.0 * aq * cq;
        if disc >= 0.0 && aq > 0.0 {
            let sdisc = disc.sqrt();
            for r in [(-bq - sdisc) / (2.0 * aq), (-bq + sdisc) / (2.0 * aq)] {
                if r > 0.0 && r < worst.0 {
                    worst = (r, x.clone());
                }
            }
        }
    }
    println!(
        "worst eps {:.6} at {:?} |w0|={:.4} |v|={:.4} vxi={:.4}",
        worst.0,
        worst.1.as_slice(),
        s.f_ev_jet(&worst.1).g.norm(),
        s.v_field(&worst.1).norm(),
        s.v_dot_xi(&worst.1)
    );

    // graph sphere pole issue
    let g = GraphSphere::new(42, 0.1);
    let im = g.immersion();
    for h in [-(1.0 - 1e-4_f64), -(1.0 - 1e-6), -(1.0 - 1e-7), -1.0] {
        let fr = im.tangent_frame(&[1.1, h]).unwrap();
        let pl = OrientedPlane::from_columns(&fr.vectors).unwrap();
        let limit =
            OrientedPlane::from_columns(&im.tangent_frame(&[1.1, -1.0]).unwrap().vectors).unwrap();
        let d = parallel_defect(&pl, &limit).unwrap();
        println!("h={h}: pos={:.3e} neg={:.3e}", d.positive, d.negative);
    }
}
