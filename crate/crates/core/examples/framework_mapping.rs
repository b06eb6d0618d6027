//! Map topics to the ten quality dimensions, total the reviews per dimension,
//! and compare two annotators.

use std::collections::BTreeMap;

use review_insight::framework::{aggregate_dimensions, compare_annotators, mapping_template, validate_mapping, Framework, TopicMapping};
use review_insight::topics::{TopicTableEntry, TopicWord};

fn main() {
    let framework = Framework::bundled();
    let topics: Vec<TopicTableEntry> = [(0, 1078, "advice"), (1, 420, "accuracy"), (2, 310, "bluetooth"), (3, 95, "price")]
        .into_iter()
        .map(|(id, size, w)| TopicTableEntry {
            id,
            size,
            top_words: vec![TopicWord {
                word: w.into(),
                weight: 1.0,
            }],
        })
        .collect();
    print!("{}", mapping_template(&topics, &framework));

    let ids: Vec<i64> = topics.iter().map(|t| t.id).collect();
    let a = TopicMapping::parse("0\t3\tadvice\n1\t3\taccuracy\n2\t6\tdevice pairing\n3\t7\tprice\n", "annotator-1").unwrap();
    let b = TopicMapping::parse("0\t3\tadvice\n1\t8\treading errors\n2\t6\tpairing\n3\t7\tcost\n", "annotator-2").unwrap();
    let a = validate_mapping(&a, &ids, &framework).unwrap();
    let b = validate_mapping(&b, &ids, &framework).unwrap();

    let counts: BTreeMap<i64, usize> = topics.iter().map(|t| (t.id, t.size)).collect();
    for d in aggregate_dimensions(&a, &counts, &framework).iter().filter(|d| d.total > 0) {
        println!("{} ({} reviews) from topics {:?}", d.name, d.total, d.topics);
    }
    let agreement = compare_annotators(&a, &b).unwrap();
    println!("agreement {:.2}, conflicts {:?}", agreement.rate, agreement.conflicts);
}
