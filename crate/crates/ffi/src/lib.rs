//! C ABI over the core simulation library. Handles are opaque pointers
//! owned by the caller and released with the matching `_free`; every
//! fallible call returns a `G2dStatus` and writes results through out
//! pointers. The header in `include/` is generated by the build script.

use std::sync::Arc;

use glauber2d::engine::{ChainState, CoupledEnsemble, ModelParams};
use glauber2d::lattice::{BoundaryCondition, Domain};
use glauber2d::sampler::sample_rad;
use glauber2d::surface::{dual_beta, tau, SurfaceTensionParams};
use glauber2d::{Error, RandomnessSource, BETA_C};

/// Status codes shared by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum G2dStatus {
    G2dOk = 0,
    G2dNullPointer = 1,
    G2dInvalidArgument = 2,
    G2dInvalidGeometry = 3,
    G2dSubcritical = 4,
    G2dNoCoalescence = 5,
    G2dInternal = 6,
}

fn status_of(e: &Error) -> G2dStatus {
    match e {
        Error::InvalidGeometry(_) => G2dStatus::G2dInvalidGeometry,
        Error::Subcritical(_) | Error::NotSubcritical(_) => G2dStatus::G2dSubcritical,
        Error::NonCoalesced { .. } => G2dStatus::G2dNoCoalescence,
        _ => G2dStatus::G2dInternal,
    }
}

/// Static description of a status code; never null, never freed.
#[no_mangle]
pub extern "C" fn g2d_status_message(status: G2dStatus) -> *const std::os::raw::c_char {
    let s: &'static [u8] = match status {
        G2dStatus::G2dOk => b"ok\0",
        G2dStatus::G2dNullPointer => b"null pointer argument\0",
        G2dStatus::G2dInvalidArgument => b"invalid argument\0",
        G2dStatus::G2dInvalidGeometry => b"invalid lattice geometry\0",
        G2dStatus::G2dSubcritical => b"beta on the wrong side of beta_c\0",
        G2dStatus::G2dNoCoalescence => b"no coalescence within the epoch limit\0",
        G2dStatus::G2dInternal => b"internal error\0",
    };
    s.as_ptr() as *const std::os::raw::c_char
}

/// Critical inverse temperature asinh(1)/2.
#[no_mangle]
pub extern "C" fn g2d_beta_c() -> f64 {
    BETA_C
}

/// Keyed source of all randomness for one coupling realization.
pub struct G2dSource {
    src: RandomnessSource,
}

#[no_mangle]
pub extern "C" fn g2d_source_new(seed: u64) -> *mut G2dSource {
    Box::into_raw(Box::new(G2dSource {
        src: RandomnessSource::new(seed),
    }))
}

/// # Safety
/// `src` must be null or a pointer from [`g2d_source_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn g2d_source_free(src: *mut G2dSource) {
    if !src.is_null() {
        drop(Box::from_raw(src));
    }
}

/// One Glauber chain on a torus driven by its source's clock stream.
pub struct G2dChain {
    ens: CoupledEnsemble,
}

/// Heat-bath chain on the n x n torus, initialized from the product
/// Rad(p_init) measure drawn from `src`'s time-zero randomness.
///
/// # Safety
/// `src` and `out` must be valid pointers; `out` receives an owned handle
/// on success and is untouched otherwise.
#[no_mangle]
pub unsafe extern "C" fn g2d_chain_new_torus(
    src: *const G2dSource,
    n: i64,
    beta: f64,
    p_init: f64,
    out: *mut *mut G2dChain,
) -> G2dStatus {
    if src.is_null() || out.is_null() {
        return G2dStatus::G2dNullPointer;
    }
    if !(beta >= 0.0) || !(0.0..=1.0).contains(&p_init) {
        return G2dStatus::G2dInvalidArgument;
    }
    let src = &(*src).src;
    let domain = match Domain::new_torus(n) {
        Ok(d) => Arc::new(d),
        Err(e) => return status_of(&e),
    };
    let bc = BoundaryCondition::free(&domain);
    let cfg = sample_rad(src, &domain, p_init);
    let chain = ChainState::new(domain, bc, cfg);
    let ens = CoupledEnsemble::new(vec![chain], *src, ModelParams::new(beta));
    *out = Box::into_raw(Box::new(G2dChain { ens }));
    G2dStatus::G2dOk
}

/// # Safety
/// `chain` must be null or an unfreed handle from [`g2d_chain_new_torus`].
#[no_mangle]
pub unsafe extern "C" fn g2d_chain_free(chain: *mut G2dChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Advance the chain to absolute time `t` (no-op if already past it).
///
/// # Safety
/// `chain` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn g2d_chain_evolve(chain: *mut G2dChain, t: f64) -> G2dStatus {
    if chain.is_null() {
        return G2dStatus::G2dNullPointer;
    }
    if !t.is_finite() || t < 0.0 {
        return G2dStatus::G2dInvalidArgument;
    }
    (&mut *chain).ens.evolve(t);
    G2dStatus::G2dOk
}

/// # Safety
/// `chain` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn g2d_chain_magnetization(
    chain: *const G2dChain,
    out: *mut f64,
) -> G2dStatus {
    if chain.is_null() || out.is_null() {
        return G2dStatus::G2dNullPointer;
    }
    *out = (&*chain).ens.chains[0].magnetization();
    G2dStatus::G2dOk
}

/// Spin at torus coordinate (x, y), reduced modulo n; writes -1 or +1.
///
/// # Safety
/// `chain` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn g2d_chain_spin(
    chain: *const G2dChain,
    x: i64,
    y: i64,
    out: *mut i32,
) -> G2dStatus {
    if chain.is_null() || out.is_null() {
        return G2dStatus::G2dNullPointer;
    }
    let c = &(&*chain).ens.chains[0];
    let v = c.domain.canonical(x, y);
    match c.domain.index_of(v) {
        Some(i) => {
            *out = c.cfg.get(i) as i32;
            G2dStatus::G2dOk
        }
        None => G2dStatus::G2dInvalidArgument,
    }
}

/// Current chain time.
///
/// # Safety
/// `chain` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn g2d_chain_time(chain: *const G2dChain, out: *mut f64) -> G2dStatus {
    if chain.is_null() || out.is_null() {
        return G2dStatus::G2dNullPointer;
    }
    *out = (&*chain).ens.chains[0].now;
    G2dStatus::G2dOk
}

/// Exact surface tension tau_beta(theta) for beta > beta_c,
/// theta in [-pi/4, pi/4].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn g2d_surface_tension(
    beta: f64,
    theta: f64,
    out: *mut f64,
) -> G2dStatus {
    if out.is_null() {
        return G2dStatus::G2dNullPointer;
    }
    if !(-std::f64::consts::FRAC_PI_4..=std::f64::consts::FRAC_PI_4).contains(&theta) {
        return G2dStatus::G2dInvalidArgument;
    }
    match SurfaceTensionParams::new(beta) {
        Ok(p) => {
            *out = tau(&p, theta);
            G2dStatus::G2dOk
        }
        Err(e) => status_of(&e),
    }
}

/// Kramers-Wannier dual temperature: sinh(2 beta) sinh(2 beta*) = 1.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn g2d_dual_beta(beta: f64, out: *mut f64) -> G2dStatus {
    if out.is_null() {
        return G2dStatus::G2dNullPointer;
    }
    if !(beta > 0.0) {
        return G2dStatus::G2dInvalidArgument;
    }
    *out = dual_beta(beta);
    G2dStatus::G2dOk
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_messages_are_nul_terminated() {
        for s in [
            G2dStatus::G2dOk,
            G2dStatus::G2dNullPointer,
            G2dStatus::G2dInvalidArgument,
            G2dStatus::G2dInvalidGeometry,
            G2dStatus::G2dSubcritical,
            G2dStatus::G2dNoCoalescence,
            G2dStatus::G2dInternal,
        ] {
            let msg = g2d_status_message(s);
            assert!(!msg.is_null());
            let text = unsafe { std::ffi::CStr::from_ptr(msg) }.to_str().unwrap();
            assert!(!text.is_empty());
        }
    }
}
