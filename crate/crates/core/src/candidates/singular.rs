//! Lowercasing and rule-based English singularization.

/// Irregular plurals. Every value is itself a fixed point of [`standardize`].
const IRREGULAR: &[(&str, &str)] = &[
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("people", "person"),
    ("geese", "goose"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("lice", "louse"),
    ("oxen", "ox"),
    ("dice", "die"),
    ("buses", "bus"),
    ("gases", "gas"),
    ("lenses", "lens"),
    ("cacti", "cactus"),
    ("fungi", "fungus"),
    ("octopi", "octopus"),
    ("knives", "knife"),
    ("wives", "wife"),
    ("lives", "life"),
    ("leaves", "leaf"),
    ("loaves", "loaf"),
    ("thieves", "thief"),
    ("scarves", "scarf"),
    ("hooves", "hoof"),
    ("wharves", "wharf"),
    ("potatoes", "potato"),
    ("tomatoes", "tomato"),
    ("heroes", "hero"),
    ("echoes", "echo"),
    ("volcanoes", "volcano"),
    ("mosquitoes", "mosquito"),
    ("torpedoes", "torpedo"),
    ("movies", "movie"),
    ("cookies", "cookie"),
    ("zombies", "zombie"),
    ("calories", "calorie"),
    ("pies", "pie"),
    ("ties", "tie"),
    ("lies", "lie"),
];

/// Words that end like plurals but are not, or have no distinct singular.
const INVARIANT: &[&str] = &[
    "series",
    "species",
    "news",
    "sheep",
    "deer",
    "fish",
    "aircraft",
    "moose",
    "swiss",
    "bass",
    "canvas",
    "atlas",
    "bias",
    "christmas",
    "pancreas",
    "lens",
    "does",
    "always",
    "perhaps",
    "whereas",
    "physics",
    "mathematics",
    "economics",
    "athletics",
    "gymnastics",
    "politics",
    "jeans",
    "pants",
    "shorts",
    "scissors",
    "trousers",
    "clothes",
    "headquarters",
    "tennis",
    "chaos",
    "cosmos",
    "texas",
    "kansas",
    "paris",
    "mars",
    "venus",
];

/// Lowercases `word` and maps English plurals to their singular form.
/// Idempotent: `standardize(standardize(w)) == standardize(w)`.
pub fn standardize(word: &str) -> String {
    let mut w = word.to_lowercase();
    // rules only ever shorten the word or map to a fixed point, so this loop
    // terminates and the result is a fixed point
    loop {
        let next = singular_step(&w);
        if next == w {
            return w;
        }
        w = next;
    }
}

fn singular_step(w: &str) -> String {
    if let Some((_, s)) = IRREGULAR.iter().find(|(p, _)| *p == w) {
        return (*s).to_string();
    }
    if INVARIANT.contains(&w) || w.chars().count() <= 3 || !w.ends_with('s') {
        return w.to_string();
    }
    if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
        return w.to_string();
    }
    let stem = |n: usize| w[..w.len() - n].to_string();
    if w.ends_with("ies") && w.len() > 4 {
        return format!("{}y", stem(3));
    }
    if w.ends_with("lves") {
        return format!("{}f", stem(3));
    }
    if w.ends_with("sses") || w.ends_with("xes") || w.ends_with("ches") || w.ends_with("shes") {
        return stem(2);
    }
    if w.ends_with("zzes") {
        return stem(3);
    }
    stem(1)
}
