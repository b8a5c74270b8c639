//! Memory footprint of the G-buffer and the three fragment layouts.
//!
//!     cargo run --example memory_table

use fhv::volume::{memory_report, LayoutKind, MemoryParams, RecordLayout, DEFAULT_GBUFFER_PAYLOAD};

fn main() {
    let mib = |layout, p: &MemoryParams| memory_report(layout, p).total_mib();
    let ds = MemoryParams {
        width: 1280,
        height: 720,
        levels: 0,
        record: RecordLayout::Aligned48,
        fragments: 0,
        gbuffer_payload: DEFAULT_GBUFFER_PAYLOAD,
    };
    println!("DS    1280x720, {DEFAULT_GBUFFER_PAYLOAD} B/pixel      {:>8.1} MiB", mib(LayoutKind::Ds, &ds));

    let lists = MemoryParams::over_allocated(1000, 1000, 6, RecordLayout::Aligned48);
    println!("PPFL  1000x1000, 10 frags/pixel     {:>8.1} MiB", mib(LayoutKind::Ppfl, &lists));

    // a 2M fragment capture, roughly the icosphere at 1000x1000
    let exact = 2_000_000;
    for levels in [6, 7, 8] {
        let p = MemoryParams { levels, ..lists };
        let a = MemoryParams { levels, fragments: exact, ..lists };
        println!(
            "L={levels}   POFL {:>8.1} MiB   POFA {:>8.1} MiB",
            mib(LayoutKind::Pofl, &p),
            mib(LayoutKind::Pofa, &a)
        );
    }
}
