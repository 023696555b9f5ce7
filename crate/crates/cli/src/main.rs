fn main() {
    println!("pac");
}
