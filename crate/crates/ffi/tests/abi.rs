//! Exercises the C entry points the way a foreign caller would: through
//! raw pointers and status codes only.

use glauber2d_ffi::*;

#[test]
fn chain_lifecycle_and_determinism() {
    unsafe {
        let src = g2d_source_new(42);
        let mut chain: *mut G2dChain = std::ptr::null_mut();
        let st = g2d_chain_new_torus(src, 12, 0.8, 0.9, &mut chain);
        assert_eq!(st, G2dStatus::G2dOk);
        assert_eq!(g2d_chain_evolve(chain, 5.0), G2dStatus::G2dOk);
        let mut m1 = 0.0;
        assert_eq!(g2d_chain_magnetization(chain, &mut m1), G2dStatus::G2dOk);
        let mut t = 0.0;
        assert_eq!(g2d_chain_time(chain, &mut t), G2dStatus::G2dOk);
        assert_eq!(t, 5.0);
        let mut s = 0;
        assert_eq!(g2d_chain_spin(chain, -1, 25, &mut s), G2dStatus::G2dOk);
        assert!(s == 1 || s == -1);
        g2d_chain_free(chain);

        // same seed, same trajectory
        let mut chain2: *mut G2dChain = std::ptr::null_mut();
        assert_eq!(
            g2d_chain_new_torus(src, 12, 0.8, 0.9, &mut chain2),
            G2dStatus::G2dOk
        );
        g2d_chain_evolve(chain2, 5.0);
        let mut m2 = 0.0;
        g2d_chain_magnetization(chain2, &mut m2);
        assert_eq!(m1, m2);
        g2d_chain_free(chain2);
        g2d_source_free(src);
    }
}

#[test]
fn status_codes_cover_misuse() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(
            g2d_chain_magnetization(std::ptr::null(), &mut out),
            G2dStatus::G2dNullPointer
        );

        let src = g2d_source_new(1);
        let mut chain: *mut G2dChain = std::ptr::null_mut();
        assert_eq!(
            g2d_chain_new_torus(src, 2, 0.8, 0.5, &mut chain),
            G2dStatus::G2dInvalidGeometry
        );
        assert_eq!(
            g2d_chain_new_torus(src, 8, -0.5, 0.5, &mut chain),
            G2dStatus::G2dInvalidArgument
        );
        assert_eq!(
            g2d_chain_new_torus(src, 8, 0.8, 1.5, &mut chain),
            G2dStatus::G2dInvalidArgument
        );
        g2d_source_free(src);

        // subcritical beta has no surface tension
        assert_eq!(
            g2d_surface_tension(0.3, 0.0, &mut out),
            G2dStatus::G2dSubcritical
        );
        assert_eq!(
            g2d_surface_tension(1.0, 1.0, &mut out),
            G2dStatus::G2dInvalidArgument
        );
    }
}

#[test]
fn closed_forms_through_the_abi() {
    unsafe {
        let mut tau0 = 0.0;
        assert_eq!(g2d_surface_tension(1.0, 0.0, &mut tau0), G2dStatus::G2dOk);
        assert!((tau0 - (2.0 + (1.0f64).tanh().ln())).abs() < 1e-12);

        let mut bstar = 0.0;
        assert_eq!(g2d_dual_beta(g2d_beta_c(), &mut bstar), G2dStatus::G2dOk);
        assert!((bstar - g2d_beta_c()).abs() < 1e-12);
    }
}

#[test]
fn header_is_generated_and_covers_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/glauber2d.h");
    let text = std::fs::read_to_string(header).expect("header generated by build script");
    for sym in [
        "g2d_source_new",
        "g2d_source_free",
        "g2d_chain_new_torus",
        "g2d_chain_free",
        "g2d_chain_evolve",
        "g2d_chain_magnetization",
        "g2d_chain_spin",
        "g2d_chain_time",
        "g2d_surface_tension",
        "g2d_dual_beta",
        "g2d_beta_c",
        "g2d_status_message",
        "G2dStatus",
        "G2dSource",
        "G2dChain",
    ] {
        assert!(text.contains(sym), "header misses {}", sym);
    }
}
