fn main() {
    // LAPACK/BLAS symbols for ndarray-linalg come from the system OpenBLAS.
    println!("cargo:rustc-link-lib=openblas");
}
