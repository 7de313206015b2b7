use std::ffi::{c_char, CStr};
use std::ptr;

use foliate_ffi::*;

fn last_error() -> String {
    let p = fol_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { fol_string_free(p) };
    s
}

fn poisson(intensity: f64) -> FolModel {
    FolModel {
        kind: FolModelKind::Poisson,
        intensity,
        p: 0.0,
        parent_intensity: 0.0,
        mark_circle_radius: 0.0,
        mark_intensity: 0.0,
    }
}

fn shift(kind: FolShiftKind) -> FolShift {
    FolShift { kind, ball_radius: 0.0, first_coordinate: false }
}

unsafe fn ids(f: *const FolFoliation, get: unsafe extern "C" fn(*const FolFoliation, *mut u64, usize) -> FolStatus) -> Vec<u64> {
    let mut v = vec![0u64; fol_foliation_len(f)];
    assert_eq!(get(f, v.as_mut_ptr(), v.len()), FolStatus::Ok);
    v
}

#[test]
fn mnn_on_torus_through_the_abi() {
    let ext = [30.0, 30.0];
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(fol_pattern_generate(poisson(1.0), 2, ext.as_ptr(), true, 0.0, 11, &mut p), FolStatus::Ok);
        let n = fol_pattern_len(p);
        assert!(n > 0);
        assert_eq!(fol_pattern_dim(p), 2);

        let mut f = ptr::null_mut();
        assert_eq!(fol_foliate(p, shift(FolShiftKind::Mnn), &mut f), FolStatus::Ok);
        let mut img = vec![0i64; n];
        assert_eq!(fol_foliation_images(f, img.as_mut_ptr(), n), FolStatus::Ok);
        for (x, &y) in img.iter().enumerate() {
            assert!(y >= 0, "torus MNN is total");
            assert_eq!(img[y as usize], x as i64, "involution");
        }
        let comp = ids(f, fol_foliation_component_ids);
        let foil = ids(f, fol_foliation_foil_ids);
        let fp = ids(f, fol_foliation_f_perp);
        let hd = ids(f, fol_foliation_h_dense);
        for x in 0..n {
            assert_eq!(foil[fp[x] as usize], foil[x]);
            assert_eq!(comp[hd[x] as usize], comp[x]);
            let mut d = -1;
            assert_eq!(fol_delta(f, x, fp[x] as usize, &mut d), FolStatus::Ok);
            assert_eq!(d, if fp[x] as usize == x { 0 } else { 1 });
        }
        assert!(fol_foliation_n_components(f) <= n);
        assert!(fol_foliation_n_foils(f) >= fol_foliation_n_components(f));

        let mut worst = f64::NAN;
        assert_eq!(fol_verify_identities(f, 4, &mut worst), FolStatus::Ok);
        assert_eq!(worst, 0.0);

        let mut js = ptr::null_mut();
        assert_eq!(fol_foliation_to_json(f, &mut js), FolStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take_string(js)).unwrap();
        assert_eq!(v["foil_id"].as_array().unwrap().len(), n);

        fol_foliation_free(f);
        fol_pattern_free(p);
    }
}

#[test]
fn json_round_trip_keeps_coordinates() {
    let ext = [20.0, 20.0];
    unsafe {
        let mut p = ptr::null_mut();
        let grid = FolModel { kind: FolModelKind::BernoulliGrid, p: 0.5, ..poisson(0.0) };
        assert_eq!(fol_pattern_generate(grid, 2, ext.as_ptr(), false, 2.0, 4, &mut p), FolStatus::Ok);
        let mut js = ptr::null_mut();
        assert_eq!(fol_pattern_to_json(p, &mut js), FolStatus::Ok);
        let mut q = ptr::null_mut();
        assert_eq!(fol_pattern_from_json(js, &mut q), FolStatus::Ok);
        fol_string_free(js);

        let n = fol_pattern_len(p) * 2;
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(fol_pattern_coords(p, a.as_mut_ptr(), n), FolStatus::Ok);
        assert_eq!(fol_pattern_coords(q, b.as_mut_ptr(), n), FolStatus::Ok);
        assert_eq!(a, b);

        // the grid metadata survives, so next-row still applies
        let mut f = ptr::null_mut();
        assert_eq!(fol_foliate(q, shift(FolShiftKind::NextRow), &mut f), FolStatus::Ok);
        fol_foliation_free(f);
        fol_pattern_free(p);
        fol_pattern_free(q);
    }
}

#[test]
fn failures_map_to_status_codes() {
    let ext = [10.0, 10.0];
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(fol_pattern_generate(poisson(-1.0), 2, ext.as_ptr(), true, 0.0, 1, &mut p), FolStatus::Config);
        assert!(p.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(fol_pattern_generate(poisson(1.0), 2, ptr::null(), true, 0.0, 1, &mut p), FolStatus::NullPointer);
        assert_eq!(fol_pattern_generate(poisson(1.0), 2, ext.as_ptr(), true, 0.0, 1, ptr::null_mut()), FolStatus::NullPointer);

        assert_eq!(fol_pattern_generate(poisson(1.0), 2, ext.as_ptr(), true, 0.0, 1, &mut p), FolStatus::Ok);
        let mut f = ptr::null_mut();
        assert_eq!(fol_foliate(p, shift(FolShiftKind::Strip), &mut f), FolStatus::Config);
        assert!(last_error().contains("strip"));
        assert_eq!(fol_foliate(p, shift(FolShiftKind::NextRow), &mut f), FolStatus::Config);

        let outside = [5.0, 5.0, 11.0, 1.0];
        let mut q = ptr::null_mut();
        assert_eq!(fol_pattern_new(2, ext.as_ptr(), false, 0.0, outside.as_ptr(), 2, &mut q), FolStatus::InvalidPattern);

        let bad = c"{\"schema_version\":2}";
        assert_eq!(fol_pattern_from_json(bad.as_ptr(), &mut q), FolStatus::Schema);

        // two MNN pairs: points of different foils have no delta
        let pts = [1.0, 1.0, 1.5, 1.0, 6.0, 6.0, 6.7, 6.0];
        assert_eq!(fol_pattern_new(2, ext.as_ptr(), true, 0.0, pts.as_ptr(), 4, &mut q), FolStatus::Ok);
        assert_eq!(fol_foliate(q, shift(FolShiftKind::Mnn), &mut f), FolStatus::Ok);
        let mut d = 0;
        assert_eq!(fol_delta(f, 0, 2, &mut d), FolStatus::Domain);
        assert_eq!(fol_delta(f, 0, 99, &mut d), FolStatus::Domain);
        let mut img = [0i64; 3];
        assert_eq!(fol_foliation_images(f, img.as_mut_ptr(), 3), FolStatus::BufferTooSmall);

        fol_foliation_free(f);
        fol_pattern_free(q);
        fol_pattern_free(p);
        fol_pattern_free(ptr::null_mut());
        fol_foliation_free(ptr::null_mut());
        assert_eq!(fol_pattern_len(ptr::null()), 0);
    }
}
