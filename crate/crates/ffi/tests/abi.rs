use std::ffi::{CStr, CString};

use vlmprep_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(vlmprep_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn smart_resize_reports_geometry() {
    let mut grid = std::mem::MaybeUninit::uninit();
    let status =
        unsafe { vlmprep_smart_resize(1000, 600, 1, 16384, grid.as_mut_ptr()) };
    assert_eq!(status, VlmStatus::Ok);
    let grid = unsafe { grid.assume_init() };
    assert_eq!((grid.resized_h, grid.resized_w), (1008, 588));
    assert_eq!((grid.merged_h, grid.merged_w), (36, 21));
    assert_eq!(grid.vit_tokens, 3024);
    assert_eq!(grid.llm_tokens, 756);
}

#[test]
fn smart_resize_rejects_bad_budget() {
    let mut grid = std::mem::MaybeUninit::uninit();
    let status = unsafe { vlmprep_smart_resize(100, 100, 5, 2, grid.as_mut_ptr()) };
    assert_eq!(status, VlmStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { vlmprep_smart_resize(100, 100, 1, 100, std::ptr::null_mut()) },
        VlmStatus::NullPointer
    );
}

#[test]
fn box_iou_matches_known_value() {
    let mut out = 0.0;
    let status = unsafe { vlmprep_box_iou(0, 0, 10, 10, 5, 5, 15, 15, &mut out) };
    assert_eq!(status, VlmStatus::Ok);
    assert!((out - 25.0 / 175.0).abs() < 1e-12);
    assert_eq!(
        unsafe { vlmprep_box_iou(10, 0, 0, 10, 0, 0, 1, 1, &mut out) },
        VlmStatus::InvalidArgument
    );
}

#[test]
fn temporal_miou_matches_known_value() {
    let pred = [0.0, 10.0, 1.0, 4.0];
    let gold = [5.0, 15.0, 2.0, 6.0];
    let mut out = 0.0;
    let status =
        unsafe { vlmprep_temporal_miou(pred.as_ptr(), gold.as_ptr(), 2, &mut out) };
    assert_eq!(status, VlmStatus::Ok);
    assert!((out - (5.0 / 15.0 + 2.0 / 5.0) / 2.0).abs() < 1e-12);
}

#[test]
fn pack_handle_round_trip() {
    let lengths = [5000usize, 3000, 4000, 2000, 8000];
    let handle = unsafe { vlmprep_pack_new(lengths.as_ptr(), lengths.len(), 8192) };
    assert!(!handle.is_null());
    assert_eq!(vlmprep_pack_bin_count(handle), 3);
    assert_eq!(vlmprep_pack_bin_size(handle, 0), 1);
    let mut buf = [0usize; 8];
    let status =
        unsafe { vlmprep_pack_bin_samples(handle, 1, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(status, VlmStatus::Ok);
    assert_eq!(&buf[..2], &[0, 1]);
    let status = unsafe { vlmprep_pack_bin_samples(handle, 1, buf.as_mut_ptr(), 1) };
    assert_eq!(status, VlmStatus::BufferTooSmall);
    unsafe { vlmprep_pack_free(handle) };
}

#[test]
fn pack_rejects_oversized_sample() {
    let lengths = [9000usize];
    let handle = unsafe { vlmprep_pack_new(lengths.as_ptr(), 1, 8192) };
    assert!(handle.is_null());
    assert!(last_error().contains("9000"));
}

#[test]
fn mrope_image_ids_layout() {
    let needed = vlmprep_mrope_image_id_count(2, 3);
    assert_eq!(needed, 18);
    let mut buf = vec![0u64; needed];
    let mut next = 0u64;
    let status = unsafe {
        vlmprep_mrope_image_ids(5, 2, 3, buf.as_mut_ptr(), buf.len(), &mut next)
    };
    assert_eq!(status, VlmStatus::Ok);
    assert_eq!(&buf[..6], &[5, 5, 5, 5, 5, 6]);
    assert_eq!(&buf[15..], &[5, 6, 7]);
    assert_eq!(next, 8);
    let status = unsafe {
        vlmprep_mrope_image_ids(5, 2, 3, buf.as_mut_ptr(), 17, &mut next)
    };
    assert_eq!(status, VlmStatus::BufferTooSmall);
}

#[test]
fn doc_parse_returns_json() {
    let html =
        CString::new("<html><body>\n<p data-bbox=\"10 10 200 40\">hi</p>\n</html></body>")
            .unwrap();
    let ptr = unsafe { vlmprep_doc_parse_to_json(html.as_ptr()) };
    assert!(!ptr.is_null());
    let json = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string();
    unsafe { vlmprep_string_free(ptr) };
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["elements"][0]["content"], "hi");

    let bad = CString::new("<html><body><h1>x</h1></html></body>").unwrap();
    let ptr = unsafe { vlmprep_doc_parse_to_json(bad.as_ptr()) };
    assert!(ptr.is_null());
    assert!(!last_error().is_empty());
}
