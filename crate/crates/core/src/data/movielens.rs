use std::collections::HashSet;
use std::path::Path;

use super::{read_latin1, DatasetBundle};
use crate::error::{Error, Result};
use crate::model::{Catalog, Gender, IdMap, ItemId, RatingRecord, TagId, UserId, UserProfile};

pub const MOVIELENS_GENRES: [&str; 19] = [
    "unknown",
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Loads an ML-100K style directory: `u.data` (tab separated
/// user, item, rating, timestamp), `u.item` (pipe separated, last 19 fields
/// are genre flags) and `u.user` (pipe separated id, age, gender,
/// occupation, zip).
pub fn load_movielens(dir: &Path) -> Result<DatasetBundle> {
    let item_path = dir.join("u.item");
    let user_path = dir.join("u.user");
    let data_path = dir.join("u.data");
    let item_text = read_latin1(&item_path)?;
    let user_text = read_latin1(&user_path)?;
    let data_text = read_latin1(&data_path)?;

    let mut items = IdMap::new();
    let mut tags_of = Vec::new();
    for (ln, line) in lines(&item_text) {
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() < 2 + MOVIELENS_GENRES.len() {
            return Err(parse_err(&item_path, ln, format!("expected at least 21 fields, got {}", fields.len())));
        }
        let id = fields[0].trim();
        if items.dense(id).is_some() {
            return Err(parse_err(&item_path, ln, format!("duplicate item id {id}")));
        }
        items.get_or_insert(id);
        let flags = &fields[fields.len() - MOVIELENS_GENRES.len()..];
        let mut t = Vec::new();
        for (g, f) in flags.iter().enumerate() {
            match f.trim() {
                "1" => t.push(TagId::from(g)),
                "0" => {}
                other => return Err(parse_err(&item_path, ln, format!("genre flag {other:?} is not 0/1"))),
            }
        }
        tags_of.push(t);
    }

    let mut users = IdMap::new();
    let mut profiles = Vec::new();
    for (ln, line) in lines(&user_text) {
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() < 4 {
            return Err(parse_err(&user_path, ln, format!("expected 5 fields, got {}", fields.len())));
        }
        let id = fields[0].trim();
        if users.dense(id).is_some() {
            return Err(parse_err(&user_path, ln, format!("duplicate user id {id}")));
        }
        users.get_or_insert(id);
        let age = match fields[1].trim() {
            "" => None,
            a => Some(a.parse::<u32>().map_err(|_| parse_err(&user_path, ln, format!("bad age {a:?}")))?),
        };
        let gender = match fields[2].trim() {
            "" => None,
            g => Some(Gender::parse(g).ok_or_else(|| parse_err(&user_path, ln, format!("bad gender {g:?}")))?),
        };
        let occupation = Some(fields[3].trim()).filter(|o| !o.is_empty()).map(str::to_string);
        profiles.push(UserProfile { gender, age, occupation });
    }

    let mut ratings = Vec::new();
    let mut seen = HashSet::new();
    for (ln, line) in lines(&data_text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(parse_err(&data_path, ln, format!("expected 4 tab-separated fields, got {}", fields.len())));
        }
        let user = users
            .dense(fields[0].trim())
            .map(UserId)
            .ok_or_else(|| parse_err(&data_path, ln, format!("unknown user {}", fields[0])))?;
        let item = items
            .dense(fields[1].trim())
            .map(ItemId)
            .ok_or_else(|| parse_err(&data_path, ln, format!("unknown item {}", fields[1])))?;
        let rating: u8 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(&data_path, ln, format!("bad rating {:?}", fields[2])))?;
        if !(1..=5).contains(&rating) {
            return Err(parse_err(&data_path, ln, format!("rating {rating} outside 1..=5")));
        }
        let timestamp = match fields.get(3).map(|s| s.trim()) {
            None | Some("") => None,
            Some(t) => Some(t.parse::<i64>().map_err(|_| parse_err(&data_path, ln, format!("bad timestamp {t:?}")))?),
        };
        if !seen.insert((user, item)) {
            return Err(parse_err(&data_path, ln, format!("duplicate rating for user {} item {}", fields[0], fields[1])));
        }
        ratings.push(RatingRecord { user, item, rating, timestamp });
    }

    let tags = IdMap::from_unique(MOVIELENS_GENRES)?;
    let catalog = Catalog::new(items, users, tags, tags_of, 5)?;
    DatasetBundle::new(catalog, ratings, Some(profiles), None)
}
