//! Minimal robots.txt evaluation for the `*` user agent.

/// Allow/Disallow path prefixes that apply to this client.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RobotsRules {
    allow: Vec<String>,
    disallow: Vec<String>,
}

impl RobotsRules {
    /// Uses the group naming `agent` if present, otherwise the `*` group.
    pub fn parse(text: &str, agent: &str) -> Self {
        let agent = agent.to_ascii_lowercase();
        let mut specific = None::<RobotsRules>;
        let mut wildcard = None::<RobotsRules>;
        let mut current: Vec<String> = Vec::new();
        let mut rules = RobotsRules::default();
        let mut in_rules = false;

        let mut flush = |agents: &mut Vec<String>, rules: &mut RobotsRules| {
            for a in agents.iter() {
                if *a == "*" {
                    wildcard.get_or_insert_with(Default::default).extend(rules);
                } else if agent.contains(a.as_str()) {
                    specific.get_or_insert_with(Default::default).extend(rules);
                }
            }
            agents.clear();
            *rules = RobotsRules::default();
        };

        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            let Some((key, value)) = line.split_once(':') else { continue };
            let value = value.trim();
            match key.trim().to_ascii_lowercase().as_str() {
                "user-agent" => {
                    if in_rules {
                        flush(&mut current, &mut rules);
                        in_rules = false;
                    }
                    current.push(value.to_ascii_lowercase());
                }
                "allow" => {
                    in_rules = true;
                    if !value.is_empty() {
                        rules.allow.push(value.to_string());
                    }
                }
                "disallow" => {
                    in_rules = true;
                    if !value.is_empty() {
                        rules.disallow.push(value.to_string());
                    }
                }
                _ => {}
            }
        }
        flush(&mut current, &mut rules);
        specific.or(wildcard).unwrap_or_default()
    }

    fn extend(&mut self, other: &RobotsRules) {
        self.allow.extend(other.allow.iter().cloned());
        self.disallow.extend(other.disallow.iter().cloned());
    }

    /// Longest matching prefix wins; Allow wins ties.
    pub fn allows(&self, path: &str) -> bool {
        let longest = |v: &[String]| v.iter().filter(|p| path.starts_with(p.as_str())).map(|p| p.len()).max();
        match (longest(&self.allow), longest(&self.disallow)) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(d)) => a >= d,
        }
    }
}
