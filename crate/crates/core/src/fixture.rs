//! Deterministic synthetic corpus: topical English and French documents
//! with sidecar metadata, plus a small relational schema in CSV files
//! linked by primary/foreign keys.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IoContext, Result};
use crate::ingest::SIDECAR_SUFFIX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub documents: usize,
    /// Share of French documents, in percent.
    pub french_percent: u32,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            documents: 240,
            french_percent: 15,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSummary {
    pub documents: usize,
    pub french_documents: usize,
    pub tables: usize,
    pub bytes: u64,
}

const AUTHORS: &[&str] = &["Scott", "Nadia", "Pierre", "Amina", "Lucas", "Grace"];
const DEPARTMENTS: &[&str] = &["analytics", "health", "energy", "finance", "education"];

const EN_TOPICS: &[&[&str]] = &[
    &[
        "data",
        "model",
        "pipeline",
        "dataset",
        "algorithm",
        "cluster",
        "query",
        "index",
        "lake",
        "warehouse",
        "AI",
        "learning",
        "network",
        "feature",
        "schema",
    ],
    &[
        "patient",
        "hospital",
        "treatment",
        "clinic",
        "diagnosis",
        "nurse",
        "therapy",
        "symptom",
        "vaccine",
        "cohort",
        "trial",
        "doctor",
        "disease",
        "care",
        "record",
    ],
    &[
        "energy", "grid", "turbine", "solar", "battery", "emission", "carbon", "plant", "wind", "storage", "demand",
        "reactor", "fuel", "voltage", "heating",
    ],
    &[
        "market",
        "bank",
        "loan",
        "budget",
        "invest",
        "asset",
        "price",
        "revenue",
        "credit",
        "portfolio",
        "tax",
        "profit",
        "risk",
        "fund",
        "insurance",
    ],
    &[
        "student",
        "school",
        "teacher",
        "course",
        "exam",
        "lesson",
        "campus",
        "degree",
        "classroom",
        "library",
        "reading",
        "curriculum",
        "grade",
        "tutor",
        "skill",
    ],
];
const EN_ADJ: &[&str] = &[
    "large", "robust", "open", "recent", "regional", "daily", "complex", "shared", "noisy", "careful", "modern",
    "public", "small", "rapid", "stable",
];
const EN_VERB: &[&str] = &[
    "improves",
    "describes",
    "measures",
    "reduces",
    "supports",
    "links",
    "explores",
    "predicts",
    "tracks",
    "compares",
    "requires",
    "reveals",
];
const EN_GENERAL: &[&str] = &[
    "method", "result", "system", "process", "evidence", "approach", "team", "project", "quality", "change", "cost",
    "region", "year", "source", "tool",
];
const EN_DOC: &[&str] = &["document", "article", "paper", "report", "study"];

const FR_TOPICS: &[&[&str]] = &[
    &[
        "données",
        "modèle",
        "analyse",
        "requête",
        "algorithme",
        "réseau",
        "entrepôt",
        "index",
        "lac",
        "schéma",
    ],
    &[
        "patient",
        "hôpital",
        "traitement",
        "clinique",
        "diagnostic",
        "médecin",
        "maladie",
        "soin",
        "vaccin",
        "essai",
    ],
    &[
        "énergie",
        "réseau",
        "éolienne",
        "batterie",
        "émission",
        "carbone",
        "centrale",
        "stockage",
        "demande",
        "chauffage",
    ],
    &[
        "marché", "banque", "prêt", "budget", "actif", "prix", "revenu", "crédit", "impôt", "risque",
    ],
    &[
        "étudiant",
        "école",
        "enseignant",
        "cours",
        "examen",
        "leçon",
        "campus",
        "diplôme",
        "bibliothèque",
        "lecture",
    ],
];
const FR_ADJ: &[&str] = &[
    "grand",
    "récent",
    "régional",
    "public",
    "moderne",
    "stable",
    "rapide",
    "ouvert",
];
const FR_VERB: &[&str] = &[
    "améliore",
    "décrit",
    "mesure",
    "réduit",
    "explore",
    "compare",
    "révèle",
    "suit",
];
const FR_DOC: &[&str] = &["document", "article", "rapport", "étude"];

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty word list")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn english_sentence(rng: &mut ChaCha8Rng, topic: &[&str], mention_big_data: bool) -> String {
    let t = |rng: &mut ChaCha8Rng| pick(rng, topic);
    let s = match rng.random_range(0..7) {
        0 => format!(
            "The {} {} {} the {} of every {}.",
            pick(rng, EN_ADJ),
            t(rng),
            pick(rng, EN_VERB),
            pick(rng, EN_GENERAL),
            t(rng)
        ),
        1 => format!(
            "In this {}, we show how the {} {} {} {}.",
            pick(rng, EN_DOC),
            pick(rng, EN_ADJ),
            t(rng),
            pick(rng, EN_VERB),
            t(rng)
        ),
        2 => format!(
            "Our {} {} {} and {} with a {} {}.",
            pick(rng, EN_GENERAL),
            pick(rng, EN_VERB),
            t(rng),
            t(rng),
            pick(rng, EN_ADJ),
            pick(rng, EN_GENERAL)
        ),
        3 => format!(
            "This {} {} the {} {} behind each {}.",
            pick(rng, EN_DOC),
            pick(rng, EN_VERB),
            pick(rng, EN_ADJ),
            pick(rng, EN_GENERAL),
            t(rng)
        ),
        4 => format!(
            "Results show that {} {} {} when the {} is {}.",
            t(rng),
            pick(rng, EN_VERB),
            t(rng),
            pick(rng, EN_GENERAL),
            pick(rng, EN_ADJ)
        ),
        5 => format!(
            "{} remains {} for {} and {} in the {}.",
            capitalize(t(rng)),
            pick(rng, EN_ADJ),
            t(rng),
            pick(rng, EN_GENERAL),
            pick(rng, EN_GENERAL)
        ),
        _ => format!(
            "A previous {} on {} {} {} across the {}.",
            pick(rng, EN_DOC),
            t(rng),
            pick(rng, EN_VERB),
            pick(rng, EN_GENERAL),
            pick(rng, EN_GENERAL)
        ),
    };
    if mention_big_data {
        format!("{} Big data {} this {}.", s, pick(rng, EN_VERB), t(rng))
    } else {
        s
    }
}

fn french_sentence(rng: &mut ChaCha8Rng, topic: &[&str]) -> String {
    let t = |rng: &mut ChaCha8Rng| pick(rng, topic);
    match rng.random_range(0..4) {
        0 => format!(
            "Le {} {} {} les {} de la {}.",
            t(rng),
            pick(rng, FR_ADJ),
            pick(rng, FR_VERB),
            t(rng),
            t(rng)
        ),
        1 => format!(
            "Dans cet {}, nous montrons que le {} {} des {} pour la {}.",
            pick(rng, FR_DOC),
            t(rng),
            pick(rng, FR_VERB),
            t(rng),
            t(rng)
        ),
        2 => format!(
            "Les {} et les {} sont au cœur de ce {} {}.",
            t(rng),
            t(rng),
            pick(rng, FR_DOC),
            pick(rng, FR_ADJ)
        ),
        _ => format!(
            "Une {} sur le {} {} avec une {} {}.",
            pick(rng, FR_DOC),
            t(rng),
            pick(rng, FR_VERB),
            t(rng),
            pick(rng, FR_ADJ)
        ),
    }
}

fn paragraph_text(rng: &mut ChaCha8Rng, target: usize, sentence: &mut dyn FnMut(&mut ChaCha8Rng) -> String) -> String {
    let mut out = String::new();
    let mut in_paragraph = 0;
    while out.len() < target {
        if in_paragraph > 0 {
            out.push(' ');
        }
        out.push_str(&sentence(rng));
        in_paragraph += 1;
        if in_paragraph >= rng.random_range(4..9) {
            out.push_str("\n\n");
            in_paragraph = 0;
        }
    }
    out.push('\n');
    out
}

fn write_with_sidecar(path: &Path, body: &str, meta: serde_json::Value) -> Result<u64> {
    fs::write(path, body).at(path)?;
    let mut side = path.as_os_str().to_os_string();
    side.push(SIDECAR_SUFFIX);
    let side = std::path::PathBuf::from(side);
    let meta = serde_json::to_string_pretty(&meta)?;
    fs::write(&side, &meta).at(&side)?;
    Ok((body.len() + meta.len()) as u64)
}

fn random_date(rng: &mut ChaCha8Rng, month: u32) -> NaiveDate {
    let year = rng.random_range(2021..=2024);
    let day = rng.random_range(1..=28);
    NaiveDate::from_ymd_opt(year, month, day).expect("valid date")
}

fn any_date(rng: &mut ChaCha8Rng) -> NaiveDate {
    let month = rng.random_range(1..=12);
    random_date(rng, month)
}

/// Writes the corpus into `dir/docs` and `dir/tables`.
pub fn generate(dir: &Path, spec: &FixtureSpec) -> Result<FixtureSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let docs = dir.join("docs");
    let tables = dir.join("tables");
    for d in [&docs, &tables] {
        fs::create_dir_all(d).at(d)?;
    }
    let mut summary = FixtureSummary::default();

    for i in 0..spec.documents {
        let french = rng.random_range(0..100) < spec.french_percent;
        let topic_idx = rng.random_range(0..DEPARTMENTS.len());
        let month = (i % 12) as u32 + 1;
        let created = random_date(&mut rng, month);
        let target = rng.random_range(3500..5500);
        let title;
        let body = if french {
            let topic = FR_TOPICS[topic_idx];
            title = format!("{} {}", capitalize(pick(&mut rng, FR_DOC)), pick(&mut rng, topic));
            paragraph_text(&mut rng, target, &mut |r| french_sentence(r, topic))
        } else {
            let topic = EN_TOPICS[topic_idx];
            title = format!("{} on {}", capitalize(pick(&mut rng, EN_DOC)), pick(&mut rng, topic));
            // every December document talks about big data, others now and then
            let big_data_rate = if month == 12 {
                4
            } else if rng.random_range(0..5) == 0 {
                12
            } else {
                0
            };
            let mut n = 0;
            paragraph_text(&mut rng, target, &mut |r| {
                n += 1;
                english_sentence(r, topic, big_data_rate > 0 && n % big_data_rate == 1)
            })
        };
        let ext = if i % 10 == 9 { "md" } else { "txt" };
        let body = if ext == "md" {
            format!("# {title}\n\n{body}")
        } else {
            format!("{title}\n\n{body}")
        };
        let name = format!("doc_{i:04}.{ext}");
        let meta = serde_json::json!({
            "author": pick(&mut rng, AUTHORS),
            "created": created.format("%Y-%m-%d").to_string(),
            "department": DEPARTMENTS[topic_idx],
            "title": title,
        });
        summary.bytes += write_with_sidecar(&docs.join(name), &body, meta)?;
        summary.documents += 1;
        summary.french_documents += usize::from(french);
    }

    for (name, csv) in tables_csv(&mut rng) {
        let month = rng.random_range(1..=12);
        let meta = serde_json::json!({
            "author": pick(&mut rng, AUTHORS),
            "created": random_date(&mut rng, month).format("%Y-%m-%d").to_string(),
        });
        summary.bytes += write_with_sidecar(&tables.join(format!("{name}.csv")), &csv, meta)?;
        summary.tables += 1;
    }
    Ok(summary)
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Csv {
        Csv(format!("{}\n", header.join(",")))
    }

    fn row(&mut self, cells: &[String]) {
        let quoted: Vec<String> = cells
            .iter()
            .map(|c| {
                if c.contains(',') || c.contains('"') {
                    format!("\"{}\"", c.replace('"', "\"\""))
                } else {
                    c.clone()
                }
            })
            .collect();
        let _ = writeln!(self.0, "{}", quoted.join(","));
    }
}

const CITIES: &[(&str, &str, u32)] = &[
    ("Lyon", "France", 522_000),
    ("Paris", "France", 2_100_000),
    ("Grenoble", "France", 158_000),
    ("Geneva", "Switzerland", 203_000),
    ("Turin", "Italy", 848_000),
    ("Montreal", "Canada", 1_760_000),
    ("Dakar", "Senegal", 1_140_000),
    ("Ouagadougou", "Burkina Faso", 2_450_000),
    ("Boston", "USA", 650_000),
    ("Leeds", "UK", 536_000),
];
const SEGMENTS: &[&str] = &["retail", "public", "industry", "research"];
const CATEGORIES: &[&str] = &["software", "hardware", "service", "training"];
const FIRST: &[&str] = &[
    "Ada", "Ben", "Chloe", "Driss", "Emma", "Farid", "Gina", "Hugo", "Ines", "Jon", "Kofi", "Lea",
];
const LAST: &[&str] = &[
    "Martin", "Diallo", "Rossi", "Smith", "Nguyen", "Moreau", "Kane", "Brown", "Petit", "Silva",
];

fn tables_csv(rng: &mut ChaCha8Rng) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();

    let mut cities = Csv::new(&["city", "country", "population"]);
    for (c, country, pop) in CITIES {
        cities.row(&[c.to_string(), country.to_string(), pop.to_string()]);
    }
    out.push(("cities", cities.0));

    let mut customers = Csv::new(&["customer_id", "name", "city", "segment", "credit_limit"]);
    for id in 1..=60 {
        customers.row(&[
            id.to_string(),
            format!("{} {} {id}", pick(rng, FIRST), pick(rng, LAST)),
            pick(rng, &CITIES.iter().map(|c| c.0).collect::<Vec<_>>()).to_string(),
            pick(rng, SEGMENTS).to_string(),
            format!("{:.2}", rng.random_range(1000.0..50000.0)),
        ]);
    }
    out.push(("customers", customers.0));

    let mut departments = Csv::new(&["department", "building", "budget"]);
    for (i, d) in DEPARTMENTS.iter().enumerate() {
        departments.row(&[
            d.to_string(),
            format!("B{}", i + 1),
            (rng.random_range(100..900) * 1000).to_string(),
        ]);
    }
    out.push(("departments", departments.0));

    let mut employees = Csv::new(&["employee_id", "full_name", "department", "salary", "hired"]);
    for id in 500..540 {
        employees.row(&[
            id.to_string(),
            format!("{} {}", pick(rng, FIRST), pick(rng, LAST)),
            pick(rng, DEPARTMENTS).to_string(),
            format!("{:.2}", rng.random_range(28000.0..95000.0)),
            any_date(rng).to_string(),
        ]);
    }
    out.push(("employees", employees.0));

    let products: Vec<String> = (1..=25).map(|i| format!("P{i:03}")).collect();
    let mut prod = Csv::new(&["product_id", "product_name", "category", "price", "description"]);
    for p in &products {
        let cat = pick(rng, CATEGORIES);
        let desc = match rng.random_range(0..4) {
            0 => "big data platform for analytics teams".to_string(),
            1 => format!("{cat} package with AI assistant"),
            2 => format!("document and article archive {cat}"),
            _ => format!("{} {cat} bundle", pick(rng, EN_ADJ)),
        };
        prod.row(&[
            p.clone(),
            format!("{} {}", capitalize(pick(rng, EN_ADJ)), pick(rng, EN_GENERAL)),
            cat.to_string(),
            format!("{:.2}", rng.random_range(10.0..2000.0)),
            desc,
        ]);
    }
    out.push(("products", prod.0));

    let mut orders = Csv::new(&["order_id", "customer_id", "order_date", "amount", "quantity", "status"]);
    let mut lines = Csv::new(&["order_id", "product_id", "line_no", "qty", "unit_price"]);
    for id in 1000..1240 {
        orders.row(&[
            id.to_string(),
            rng.random_range(1..=60).to_string(),
            any_date(rng).to_string(),
            format!("{:.2}", rng.random_range(20.0..5000.0)),
            rng.random_range(1..=12).to_string(),
            pick(rng, &["open", "shipped", "cancelled", "returned"]).to_string(),
        ]);
        for line in 1..=rng.random_range(1..=3) {
            lines.row(&[
                id.to_string(),
                pick(rng, &products.iter().map(String::as_str).collect::<Vec<_>>()).to_string(),
                line.to_string(),
                rng.random_range(1..=9).to_string(),
                format!("{:.2}", rng.random_range(10.0..2000.0)),
            ]);
        }
    }
    out.push(("orders", orders.0));
    out.push(("order_lines", lines.0));

    let mut projects = Csv::new(&["project_id", "title", "department", "budget", "start_date"]);
    for id in 3000..3030 {
        let d = pick(rng, DEPARTMENTS);
        projects.row(&[
            id.to_string(),
            format!("{} {} study", capitalize(pick(rng, EN_ADJ)), pick(rng, EN_GENERAL)),
            d.to_string(),
            (rng.random_range(10..500) * 1000).to_string(),
            any_date(rng).to_string(),
        ]);
    }
    out.push(("projects", projects.0));

    let sensors: Vec<String> = (1..=15).map(|i| format!("S{i:02}")).collect();
    let mut sens = Csv::new(&["sensor_id", "site", "kind", "installed"]);
    for s in &sensors {
        sens.row(&[
            s.clone(),
            pick(rng, &CITIES.iter().map(|c| c.0).collect::<Vec<_>>()).to_string(),
            pick(rng, &["thermal", "humidity", "air"]).to_string(),
            any_date(rng).to_string(),
        ]);
    }
    out.push(("sensors", sens.0));

    let mut readings = Csv::new(&["sensor_id", "reading_day", "temperature", "humidity"]);
    for day in 0..40 {
        for s in &sensors {
            let temp = if rng.random_range(0..50) == 0 {
                String::new()
            } else {
                format!("{:.1}", rng.random_range(-5.0..35.0))
            };
            readings.row(&[
                s.clone(),
                (day + 1).to_string(),
                temp,
                format!("{:.1}", rng.random_range(20.0..95.0)),
            ]);
        }
    }
    out.push(("readings", readings.0));

    let mut publications = Csv::new(&["pub_id", "title", "department", "year", "citations"]);
    for id in 7000..7080 {
        let topic = rng.random_range(0..EN_TOPICS.len());
        let title = format!(
            "{} {} {}",
            capitalize(pick(rng, EN_ADJ)),
            pick(rng, EN_TOPICS[topic]),
            pick(rng, &["article", "paper", "document", "big data survey", "AI review"])
        );
        publications.row(&[
            id.to_string(),
            title,
            pick(rng, DEPARTMENTS).to_string(),
            rng.random_range(2015..=2024).to_string(),
            rng.random_range(0..400).to_string(),
        ]);
    }
    out.push(("publications", publications.0));

    let mut survey = Csv::new(&["respondent", "region", "age", "score", "satisfied"]);
    for id in 9000..9150 {
        survey.row(&[
            id.to_string(),
            pick(rng, &["north", "south", "east", "west"]).to_string(),
            rng.random_range(18..80).to_string(),
            format!("{:.2}", rng.random_range(0.0..10.0)),
            pick(rng, &["true", "false"]).to_string(),
        ]);
    }
    out.push(("survey", survey.0));
    out
}
