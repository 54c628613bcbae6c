//! Drive the baseline policies request by request.

use edgecache::policies::{Belady, CachePolicy, Lfuda, Lru, LruK, S4Lru};
use edgecache::Request;

fn main() {
    // Two hot keys, interrupted by a scan over sixteen cold ones.
    let mut keys: Vec<u64> = Vec::new();
    for round in 0..4u64 {
        keys.extend([1, 2, 1, 2, 1, 2]);
        keys.extend((10..18).map(|k| k + 8 * (round % 2)));
    }
    let requests: Vec<Request> = keys.iter().enumerate().map(|(i, k)| Request::new(i as f64, *k, 1)).collect();
    let capacity = 8;

    let mut policies: Vec<Box<dyn CachePolicy>> = vec![
        Box::new(Lru::new(capacity)),
        Box::new(LruK::new(capacity, 2)),
        Box::new(S4Lru::new(capacity)),
        Box::new(Lfuda::new(capacity)),
        Box::new(Belady::for_trace(capacity, &requests)),
    ];
    println!("{:>8}  {}", "", keys.iter().map(|k| format!("{k:>2}")).collect::<Vec<_>>().join(" "));
    for p in &mut policies {
        let marks: Vec<&str> = requests.iter().map(|r| if p.on_request(r).is_hit() { " H" } else { " ." }).collect();
        let hits = marks.iter().filter(|m| **m == " H").count();
        println!("{:>8}  {}  {hits} hits", p.name(), marks.join(" "));
    }
}
