use std::fs;
use std::path::Path;

use proptest::prelude::*;

use super::*;
use crate::model::{ItemId, UserId};

fn write(dir: &Path, name: &str, body: &[u8]) {
    fs::write(dir.join(name), body).unwrap();
}

fn flags(on: &[usize]) -> String {
    (0..19)
        .map(|g| if on.contains(&g) { "1" } else { "0" })
        .collect::<Vec<_>>()
        .join("|")
}

fn mini_movielens(dir: &Path) {
    let mut items = Vec::new();
    items.extend_from_slice(format!("242|Kolya (1996)|24-Jan-1997||http://x|{}\n", flags(&[5])).as_bytes());
    items.extend_from_slice(b"302|Caf\xe9 (1997)|01-Jan-1997||http://y|");
    items.extend_from_slice(format!("{}\n", flags(&[1, 16])).as_bytes());
    items.extend_from_slice(format!("377|Heavyweights (1994)|01-Jan-1994||http://z|{}\n", flags(&[])).as_bytes());
    write(dir, "u.item", &items);
    write(
        dir,
        "u.user",
        b"196|49|M|writer|55105\n186|39|F|executive|00000\n22|21|M|writer|40206\n",
    );
    write(
        dir,
        "u.data",
        b"196\t242\t3\t881250949\n186\t302\t3\t891717742\n22\t377\t1\t878887116\n196\t302\t5\t881250950\n",
    );
}

#[test]
fn movielens_parses_fields() {
    let tmp = tempfile::tempdir().unwrap();
    mini_movielens(tmp.path());
    let b = load_movielens(tmp.path()).unwrap();
    assert_eq!(b.catalog.n_items(), 3);
    assert_eq!(b.catalog.n_users(), 3);
    assert_eq!(b.catalog.n_tags(), 19);
    let r = b.ratings[0];
    assert_eq!(b.catalog.users.external(r.user.0), Some("196"));
    assert_eq!(b.catalog.items.external(r.item.0), Some("242"));
    assert_eq!((r.rating, r.timestamp), (3, Some(881250949)));
    assert_eq!(b.catalog.tags_of(ItemId(1)).len(), 2);
    assert!(b.catalog.tags_of(ItemId(2)).is_empty());
    let p = &b.profiles.as_ref().unwrap()[1];
    assert_eq!((p.age, p.occupation.as_deref()), (Some(39), Some("executive")));
    let s = b.summary();
    assert_eq!((s.male, s.female, s.n_ratings), (2, 1, 4));
}

#[test]
fn movielens_missing_file_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    mini_movielens(tmp.path());
    fs::remove_file(tmp.path().join("u.user")).unwrap();
    match load_movielens(tmp.path()) {
        Err(Error::MissingFile { path }) => assert!(path.ends_with("u.user")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn movielens_malformed_line_reports_number() {
    let tmp = tempfile::tempdir().unwrap();
    mini_movielens(tmp.path());
    write(tmp.path(), "u.data", b"196\t242\t3\t1\n186\tx302\t3\t2\n");
    match load_movielens(tmp.path()) {
        Err(Error::Parse { path, line, .. }) => {
            assert!(path.ends_with("u.data"));
            assert_eq!(line, 2);
        }
        other => panic!("unexpected {other:?}"),
    }
    write(tmp.path(), "u.data", b"196\t242\tfive\t1\n");
    assert!(matches!(load_movielens(tmp.path()), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn generic_three_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("r.csv");
    fs::write(&p, "user,item,rating\na,x,4\nb,x,5\na,y,1\n").unwrap();
    let b = load_generic(&p, None, None, &GenericSchema::csv()).unwrap();
    assert!(b.profiles.is_none() && b.explicit_groups.is_none());
    assert_eq!((b.catalog.n_users(), b.catalog.n_items(), b.ratings.len()), (2, 2, 3));
}

#[test]
fn generic_named_columns_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("r.tsv");
    fs::write(&p, "ts\trating\titem\tuser\n10\t3\ti1\tu1\n11\t7\ti2\tu1\n").unwrap();
    let mut schema = GenericSchema {
        delimiter: '\t',
        has_header: true,
        user: ColumnRef::Name("user".into()),
        item: ColumnRef::Name("item".into()),
        rating: ColumnRef::Name("rating".into()),
        timestamp: Some(ColumnRef::Name("ts".into())),
        rating_scale: 5,
    };
    assert!(matches!(load_generic(&p, None, None, &schema), Err(Error::DataIntegrity(_))));
    schema.rating_scale = 10;
    let b = load_generic(&p, None, None, &schema).unwrap();
    assert_eq!(b.ratings[1].rating, 7);
    assert_eq!(b.ratings[0].timestamp, Some(10));
    schema.user = ColumnRef::Name("who".into());
    match load_generic(&p, None, None, &schema) {
        Err(Error::Config { param, .. }) => assert_eq!(param, "schema.user"),
        other => panic!("unexpected {other:?}"),
    }
    schema.user = ColumnRef::Index(9);
    assert!(matches!(load_generic(&p, None, None, &schema), Err(Error::Config { .. })));
}

#[test]
fn generic_schema_from_json() {
    let s: GenericSchema =
        serde_json::from_str(r#"{"user": 0, "item": "movie", "rating": 2, "delimiter": ";"}"#).unwrap();
    assert_eq!(s.item, ColumnRef::Name("movie".into()));
    assert!(s.has_header);
    assert!(serde_json::from_str::<GenericSchema>(r#"{"user":0,"item":1,"rating":2,"bogus":1}"#).is_err());
}

#[test]
fn generic_explicit_groups_and_tags() {
    let tmp = tempfile::tempdir().unwrap();
    let r = tmp.path().join("r.csv");
    let g = tmp.path().join("g.csv");
    let t = tmp.path().join("t.csv");
    let mut ratings = String::from("user,item,rating\n");
    let mut groups = String::from("user,group\n");
    for u in 0..304 {
        ratings.push_str(&format!("u{u},i{},{}\n", u % 946, 1 + u % 5));
        groups.push_str(&format!("u{u},c{}\n", u % 18));
    }
    fs::write(&r, ratings).unwrap();
    fs::write(&g, groups).unwrap();
    fs::write(&t, "item,tag\ni0,music\ni1,music\ni1,tv\n").unwrap();
    let b = load_generic(&r, Some(&g), Some(&t), &GenericSchema::csv()).unwrap();
    assert_eq!(b.catalog.n_tags(), 2);
    assert_eq!(b.catalog.tags_of(ItemId(1)).len(), 2);
    let gs = group_users(&b, &GroupingStrategy::Explicit).unwrap();
    assert_eq!(gs.len(), 18);
    assert_eq!(gs.groups().iter().map(|g| g.size()).sum::<usize>(), 304);
}

fn profiled_bundle() -> DatasetBundle {
    let tmp = tempfile::tempdir().unwrap();
    mini_movielens(tmp.path());
    let mut b = load_movielens(tmp.path()).unwrap();
    b.profiles.as_mut().unwrap()[2].occupation = None;
    b
}

#[test]
fn grouping_by_profile() {
    let b = profiled_bundle();
    let age = group_users(&b, &GroupingStrategy::ByAge).unwrap();
    let labels: Vec<_> = age.groups().iter().map(|g| g.label.as_str()).collect();
    assert_eq!(labels, ["21 to 30", "31 to 40", "41 to 50"]);
    assert_eq!(age.groups()[0].members, vec![UserId(2)]);

    let occ = group_users(&b, &GroupingStrategy::ByOccupation).unwrap();
    let labels: Vec<_> = occ.groups().iter().map(|g| g.label.as_str()).collect();
    assert_eq!(labels, ["executive", "writer", UNKNOWN_GROUP]);

    let gender = group_users(&b, &GroupingStrategy::ByGender).unwrap();
    assert_eq!(gender.by_label("M").unwrap().members, vec![UserId(0), UserId(2)]);
}

#[test]
fn grouping_needs_profiles() {
    let mut b = profiled_bundle();
    b.profiles = None;
    assert!(matches!(group_users(&b, &GroupingStrategy::ByGender), Err(Error::Strategy(_))));
    assert!(matches!(group_users(&b, &GroupingStrategy::Explicit), Err(Error::Strategy(_))));
    assert!(matches!(
        group_users(&b, &GroupingStrategy::Random { count: 4, seed: 1 }),
        Err(Error::Strategy(_))
    ));
}

#[test]
fn strategy_parsing() {
    assert_eq!("occupation".parse::<GroupingStrategy>().unwrap(), GroupingStrategy::ByOccupation);
    assert_eq!(
        "random:21:7".parse::<GroupingStrategy>().unwrap(),
        GroupingStrategy::Random { count: 21, seed: 7 }
    );
    assert!("random:x".parse::<GroupingStrategy>().is_err());
    assert!("height".parse::<GroupingStrategy>().is_err());
    let s: GroupingStrategy = serde_json::from_str(r#"{"kind":"random","count":5,"seed":3}"#).unwrap();
    assert_eq!(s.to_string().parse::<GroupingStrategy>().unwrap(), s);
}

fn synthetic(n_users: usize, n_ratings: usize) -> DatasetBundle {
    use crate::model::{Catalog, IdMap, RatingRecord};
    let n_items = n_ratings.div_ceil(n_users.max(1)).max(1);
    let catalog = Catalog::new(
        IdMap::from_unique((0..n_items).map(|i| i.to_string())).unwrap(),
        IdMap::from_unique((0..n_users).map(|i| i.to_string())).unwrap(),
        IdMap::new(),
        Vec::new(),
        5,
    )
    .unwrap();
    let ratings = (0..n_ratings)
        .map(|k| RatingRecord::new(UserId::from(k % n_users), ItemId::from(k / n_users), 1 + (k * 7 % 5) as u8))
        .collect();
    DatasetBundle::new(catalog, ratings, None, None).unwrap()
}

#[test]
fn kfold_examples() {
    let b = synthetic(3, 10);
    let plan = kfold_split(&b, 5, 9).unwrap();
    assert!(plan.folds.iter().all(|f| f.len() == 2));
    let mut all: Vec<usize> = plan.folds.concat();
    all.sort_unstable();
    assert_eq!(all, (0..10).collect::<Vec<_>>());
    for (f, t) in plan.folds.iter().zip(&plan.test) {
        assert!(t.iter().all(|i| f.contains(i) && b.ratings[*i].rating == 5));
    }
    assert_eq!(plan, kfold_split(&b, 5, 9).unwrap());
    assert_ne!(plan.folds, kfold_split(&b, 5, 10).unwrap().folds);
    assert_eq!(plan.train(0).len(), 8);
    assert!(matches!(kfold_split(&synthetic(2, 3), 5, 0), Err(Error::Split(_))));
    assert!(matches!(kfold_split(&b, 1, 0), Err(Error::Config { .. })));
}

#[test]
fn bundle_snapshot_round_trip() {
    let b = profiled_bundle();
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bundle.json");
    b.save_json(&p).unwrap();
    assert_eq!(DatasetBundle::load_json(&p).unwrap(), b);
}

#[test]
fn bundle_rejects_bad_ratings() {
    let b = synthetic(2, 4);
    let mut bad = b.ratings.clone();
    bad.push(bad[0]);
    assert!(DatasetBundle::new(b.catalog.clone(), bad, None, None).is_err());
    let mut bad = b.ratings.clone();
    bad[0].rating = 6;
    assert!(DatasetBundle::new(b.catalog.clone(), bad, None, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_grouping_is_a_seeded_partition(n in 1usize..200, count in 1usize..30, seed in any::<u64>()) {
        prop_assume!(count <= n);
        let b = synthetic(n, n);
        let s = GroupingStrategy::Random { count, seed };
        let gs = group_users(&b, &s).unwrap();
        prop_assert_eq!(gs.len(), count);
        let membership = gs.membership(n);
        prop_assert!(membership.iter().all(Option::is_some));
        let sizes: Vec<usize> = gs.groups().iter().map(|g| g.size()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(gs, group_users(&b, &s).unwrap());
    }

    #[test]
    fn kfold_partitions(n in 2usize..300, k in 2usize..10, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let b = synthetic(7, n);
        let plan = kfold_split(&b, k, seed).unwrap();
        let mut all = plan.folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for f in 0..k {
            prop_assert_eq!(plan.train(f).len() + plan.folds[f].len(), n);
        }
    }
}
