/// Keeps freed image buffers in the process heap instead of handing them back
/// to the kernel, so consecutive fusions reuse pages rather than faulting in
/// fresh zeroed ones. Only glibc is tuned; elsewhere this does nothing.
pub fn retain_heap() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    // SAFETY: mallopt only adjusts allocator thresholds; it is called before
    // any worker threads exist.
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, 32 << 20);
        libc::mallopt(libc::M_TRIM_THRESHOLD, i32::MAX);
    }
}
