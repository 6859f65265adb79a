fn main() {
    // Placeholder while the library crates are under construction.
}
