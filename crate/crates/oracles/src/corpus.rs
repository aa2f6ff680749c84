use std::collections::BTreeSet;

use billmap::ingest::{BillRecord, BillType, Chamber, Corpus, Party};
use chrono::{Datelike, Days, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STATES: [&str; 50] = [
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "ID", "IL", "IN", "IA", "KS", "KY", "LA", "ME",
    "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM", "NY", "NC", "ND", "OH", "OK", "OR", "PA",
    "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY",
];
const TYPES: [BillType; 4] =
    [BillType::Bill, BillType::Resolution, BillType::JointResolution, BillType::ConcurrentResolution];

/// Parameters of a synthetic bill corpus.
///
/// Bills fall into `blobs` latent topics. Each topic prefers its own
/// committees, states, bill type, chamber and sponsor party; a bill draws
/// from its topic's preferences with probability `separation` and
/// uniformly otherwise. Pre-COVID bills are dated 1973 through 2018 with
/// the matching congress. COVID bills sit in the 116th congress with
/// dates blended between a pre-COVID-like date and 2019-2020 by
/// `time_signal` (0: same date distribution as pre-COVID, 1: all in
/// 2019-2020).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_pre: usize,
    pub n_covid: usize,
    pub blobs: usize,
    pub separation: f64,
    pub committee_vocab: usize,
    pub state_vocab: usize,
    pub time_signal: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_pre: 300,
            n_covid: 150,
            blobs: 4,
            separation: 0.9,
            committee_vocab: 24,
            state_vocab: 20,
            time_signal: 1.0,
            seed: 0,
        }
    }
}

struct Topic {
    committees: Vec<String>,
    states: Vec<&'static str>,
    bill_type: BillType,
    chamber: Chamber,
    party: Party,
    cosponsor_mean: f64,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

fn day_between(rng: &mut ChaCha8Rng, from: NaiveDate, to: NaiveDate) -> i64 {
    let span = (to - from).num_days();
    rng.random_range(0..=span)
}

/// Generates a corpus from `spec`. Equal specs give equal corpora.
pub fn generate_corpus(spec: &SyntheticSpec) -> Corpus {
    assert!(spec.blobs >= 1, "need at least one topic");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let committees: Vec<String> = (0..spec.committee_vocab.max(1)).map(|i| format!("committee {i:02}")).collect();
    let states: Vec<&'static str> = STATES[..spec.state_vocab.clamp(1, STATES.len())].to_vec();

    let topics: Vec<Topic> = (0..spec.blobs)
        .map(|t| {
            let mut own_committees = committees.clone();
            own_committees.shuffle(&mut rng);
            own_committees.truncate(3.min(committees.len()));
            let mut own_states = states.clone();
            own_states.shuffle(&mut rng);
            own_states.truncate(3.min(states.len()));
            Topic {
                committees: own_committees,
                states: own_states,
                bill_type: TYPES[t % TYPES.len()],
                chamber: if t % 2 == 0 { Chamber::House } else { Chamber::Senate },
                party: [Party::Democrat, Party::Republican][(t / 2 + t) % 2],
                cosponsor_mean: 3.0 + 6.0 * t as f64,
            }
        })
        .collect();

    let pre_start = date(1973, 1, 3);
    let pre_end = date(2018, 12, 31);
    let covid_start = date(2019, 1, 3);
    let covid_end = date(2020, 12, 31);

    let mut records = Vec::with_capacity(spec.n_pre + spec.n_covid);
    for i in 0..spec.n_pre + spec.n_covid {
        let covid = i >= spec.n_pre;
        let topic = &topics[rng.random_range(0..topics.len())];
        let on_topic = |rng: &mut ChaCha8Rng| rng.random_bool(spec.separation.clamp(0.0, 1.0));

        let intro = if covid {
            let old = pre_start + Days::new(day_between(&mut rng, pre_start, pre_end) as u64);
            let new = covid_start + Days::new(day_between(&mut rng, covid_start, covid_end) as u64);
            let offset = (old - pre_start).num_days() as f64
                + spec.time_signal * ((new - pre_start).num_days() - (old - pre_start).num_days()) as f64;
            pre_start + Days::new(offset.round() as u64)
        } else {
            pre_start + Days::new(day_between(&mut rng, pre_start, pre_end) as u64)
        };
        let congress = if covid { 116 } else { 93 + ((intro.year() - 1973) as u32 / 2).min(22) };

        let chamber = if on_topic(&mut rng) {
            topic.chamber
        } else if rng.random_bool(0.5) {
            Chamber::House
        } else {
            Chamber::Senate
        };
        let bill_type = if on_topic(&mut rng) { topic.bill_type } else { *TYPES.choose(&mut rng).expect("non-empty") };
        let party = if on_topic(&mut rng) {
            topic.party
        } else {
            [Party::Democrat, Party::Republican, Party::Other][rng.random_range(0..3)]
        };
        let state = if on_topic(&mut rng) { topic.states.choose(&mut rng) } else { states.choose(&mut rng) };
        let n_committees = rng.random_range(1..=3usize);
        let bill_committees: BTreeSet<String> = (0..n_committees)
            .map(|_| {
                let pool = if on_topic(&mut rng) { &topic.committees } else { &committees };
                pool.choose(&mut rng).expect("non-empty").clone()
            })
            .collect();
        let cosponsors = (topic.cosponsor_mean * (0.5 + rng.random::<f64>())).round() as u32;
        let last_action = intro + Days::new(rng.random_range(0..=400u64));
        let prefix = match (chamber, bill_type) {
            (Chamber::House, BillType::Bill) => "hr",
            (Chamber::Senate, BillType::Bill) => "s",
            (Chamber::House, _) => "hres",
            (Chamber::Senate, _) => "sres",
        };

        records.push(BillRecord {
            bill_id: format!("{prefix}{i}-{congress}"),
            chamber,
            bill_type,
            congress,
            intro_date: intro,
            sponsor_party: party,
            sponsor_state: state.expect("non-empty").to_string(),
            sponsor_district: if chamber == Chamber::House { rng.random_range(1..=20) } else { 0 },
            cosponsor_count: cosponsors,
            committees: bill_committees,
            last_action_date: last_action,
            last_action_text: if covid { "Referred to committee" } else { "Became law" }.to_string(),
        });
    }
    Corpus::new(records, vec![format!("synthetic:{}", spec.seed)]).expect("ids are unique by construction")
}
