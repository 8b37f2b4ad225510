use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use ndrank_ffi::*;

fn last_error() -> String {
    let p = ndrank_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn tensor(shape: &[usize], data: &[f64]) -> *mut NdTensor {
    let mut t = ptr::null_mut();
    let s = ndrank_tensor_new(shape.as_ptr(), shape.len(), data.as_ptr(), data.len(), &mut t);
    assert_eq!(s, NdStatus::Ok);
    t
}

#[test]
fn collider_roundtrip() {
    unsafe {
        let text = CString::new("elements: a,b,c\na < c\nb < c\n").unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(ndrank_poset_parse(text.as_ptr(), &mut p), NdStatus::Ok);
        assert_eq!(ndrank_poset_size(p), 3);
        let t = tensor(&[3, 3], &[2.0, 1.0, 2.0, 1.0, 2.0, 2.0, 2.0, 2.0, 4.0]);
        let posets = [p as *const NdPoset, p as *const NdPoset];

        let mut member = false;
        let mut violations = usize::MAX;
        let s = ndrank_check_finite_rank(t, posets.as_ptr(), 2, f64::NAN, &mut member, &mut violations);
        assert_eq!(s, NdStatus::Ok);
        assert!(member);
        assert_eq!(violations, 0);

        let mut f = ptr::null_mut();
        assert_eq!(ndrank_hals(t, posets.as_ptr(), 2, 4, 5, 0, 2000, &mut f), NdStatus::Ok);
        assert_eq!(ndrank_factorization_rank(f), 4);
        let mut residual = f64::NAN;
        assert_eq!(ndrank_factorization_residual(f, t, &mut residual), NdStatus::Ok);
        let mut rss = f64::NAN;
        assert_eq!(ndrank_factorization_rss(f, &mut rss), NdStatus::Ok);
        assert!((residual * residual - rss).abs() < 1e-9);
        assert!(residual < 1e-3, "residual {residual}");

        let mut recon = ptr::null_mut();
        assert_eq!(ndrank_factorization_reconstruct(f, &mut recon), NdStatus::Ok);
        assert_eq!(ndrank_tensor_len(recon), 9);
        let mut buf = [0.0; 9];
        assert_eq!(ndrank_tensor_copy_data(recon, buf.as_mut_ptr(), 9), NdStatus::Ok);
        assert!((buf[8] - 4.0).abs() < 1e-3);
        assert_eq!(
            ndrank_tensor_copy_data(recon, buf.as_mut_ptr(), 4),
            NdStatus::ShapeMismatch
        );

        ndrank_tensor_free(recon);
        ndrank_factorization_free(f);
        ndrank_tensor_free(t);
        ndrank_poset_free(p);
    }
}

#[test]
fn projection_matches_pava() {
    unsafe {
        let mut chain = ptr::null_mut();
        assert_eq!(ndrank_poset_chain(4, &mut chain), NdStatus::Ok);
        let y = [3.0, 1.0, 2.0, -5.0];
        let mut out = [0.0; 4];
        assert_eq!(ndrank_project(chain, y.as_ptr(), ptr::null(), 4, out.as_mut_ptr()), NdStatus::Ok);
        // Pooling all four gives mean 0.25, which is already nonnegative.
        for v in out {
            assert!((v - 0.25).abs() < 1e-12);
        }
        let y = [3.0, 1.0, 2.0, 5.0];
        let w = [1.0, 1.0, 2.0, 1.0];
        assert_eq!(ndrank_project(chain, y.as_ptr(), w.as_ptr(), 4, out.as_mut_ptr()), NdStatus::Ok);
        for (v, e) in out.iter().zip([2.0, 2.0, 2.0, 5.0]) {
            assert!((v - e).abs() < 1e-12, "{out:?}");
        }
        let zero = [1.0, 1.0, 1.0, 0.0];
        assert_eq!(
            ndrank_project(chain, y.as_ptr(), zero.as_ptr(), 4, out.as_mut_ptr()),
            NdStatus::InvalidArgument
        );
        assert_eq!(ndrank_project(chain, y.as_ptr(), ptr::null(), 3, out.as_mut_ptr()), NdStatus::ShapeMismatch);
        ndrank_poset_free(chain);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut p = ptr::null_mut();
        let bad = CString::new("elements: a,b\na < b\nb < a\n").unwrap();
        assert_eq!(ndrank_poset_parse(bad.as_ptr(), &mut p), NdStatus::InvalidOrder);
        assert!(p.is_null());
        assert!(last_error().contains("cycle"));

        let bad = CString::new("elements: a\na < z\n").unwrap();
        assert_eq!(ndrank_poset_parse(bad.as_ptr(), &mut p), NdStatus::Parse);
        assert!(last_error().contains("line 2"));

        assert_eq!(ndrank_poset_parse(ptr::null(), &mut p), NdStatus::NullPointer);
        assert_eq!(ndrank_poset_chain(0, &mut p), NdStatus::InvalidArgument);

        let mut t = ptr::null_mut();
        let shape = [2usize, 2];
        let data = [1.0, 2.0, 3.0];
        assert_eq!(ndrank_tensor_new(shape.as_ptr(), 2, data.as_ptr(), 3, &mut t), NdStatus::ShapeMismatch);

        let t = tensor(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let mut chain = ptr::null_mut();
        assert_eq!(ndrank_poset_chain(2, &mut chain), NdStatus::Ok);
        let posets = [chain as *const NdPoset, chain as *const NdPoset];
        let mut f = ptr::null_mut();
        assert_eq!(ndrank_hals(t, posets.as_ptr(), 2, 0, 1, 0, 0, &mut f), NdStatus::InvalidArgument);
        let mut member = false;
        assert_eq!(
            ndrank_check_finite_rank(t, posets.as_ptr(), 1, f64::NAN, &mut member, ptr::null_mut()),
            NdStatus::ShapeMismatch
        );
        ndrank_poset_free(chain);
        ndrank_tensor_free(t);

        // Freeing NULL is a no-op.
        ndrank_poset_free(ptr::null_mut());
        ndrank_tensor_free(ptr::null_mut());
        ndrank_factorization_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ndrank.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build script");
    for name in [
        "ndrank_last_error_message",
        "ndrank_poset_parse",
        "ndrank_tensor_new",
        "ndrank_check_finite_rank",
        "ndrank_project",
        "ndrank_hals",
        "ndrank_factorization_reconstruct",
        "typedef struct NdPoset NdPoset",
        "ND_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    // Syntax-check the header with a C compiler when one is available.
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"ndrank.h\"\nint main(void) { NdPoset *p = 0; return ndrank_poset_chain(3, &p) == ND_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(_) => eprintln!("no C compiler found; skipping header compile check"),
    }
}
