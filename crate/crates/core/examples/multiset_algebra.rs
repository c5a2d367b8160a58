//! Bag operations on resource multisets.
//!
//!     cargo run --example multiset_algebra

use sas_sim::multiset::Multiset;

fn main() {
    let a: Multiset<&str> = ["copper", "silk", "silk"].into_iter().collect();
    let b: Multiset<&str> = [("silk", 1), ("porcelain", 2)].into_iter().collect();

    let sum = &a + &b;
    println!("{a} + {b} = {sum}");
    println!(
        "|{sum}| = {} = {} + {}",
        sum.cardinality(),
        a.cardinality(),
        b.cardinality()
    );
    println!("silk appears {} times", sum.multiplicity(&"silk"));

    let fewer = sum.remove(&"porcelain", 1).unwrap();
    println!("after removing one porcelain: {fewer}");

    match sum.remove(&"gold", 1) {
        Ok(_) => unreachable!(),
        Err(e) => println!("removing gold fails: {e}"),
    }

    println!("{a} is a sub-bag of {sum}: {}", a.is_subset(&sum));
    println!("{sum} - {a} = {}", sum.difference(&a).unwrap());
}
