//! Replays the worked three- and four-action examples and the oracle
//! computation on the five-action preset.

use std::fmt;

use crate::agents::{construct_rent, rent_feasible, rent_gain, AgentBehavior};
use crate::config::Preset;
use crate::error::Result;
use crate::model::{best_response, steered_net_values, IncentiveVector, NormalizedRewardVector, ProblemInstance};
use crate::policy::oracle_incentives;

pub const GOLDEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCheck {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

impl fmt::Display for GoldenCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: expected {}, got {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.expected,
            self.actual
        )
    }
}

#[derive(Default)]
struct Checks(Vec<GoldenCheck>);

impl Checks {
    fn num(&mut self, name: &str, expected: f64, actual: f64) {
        self.0.push(GoldenCheck {
            name: name.into(),
            expected: format!("{expected}"),
            actual: format!("{actual}"),
            pass: (expected - actual).abs() <= GOLDEN_TOL,
        });
    }

    fn eq<T: fmt::Debug + PartialEq>(&mut self, name: &str, expected: T, actual: T) {
        self.0.push(GoldenCheck {
            name: name.into(),
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
            pass: expected == actual,
        });
    }

    fn vec(&mut self, name: &str, expected: &[f64], actual: &[f64]) {
        let pass = expected.len() == actual.len()
            && expected.iter().zip(actual).all(|(e, a)| (e - a).abs() <= GOLDEN_TOL);
        self.0.push(GoldenCheck {
            name: name.into(),
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
            pass,
        });
    }
}

/// Principal's expected net reward when offering `pi` to an agent playing `s`.
fn principal_net(inst: &ProblemInstance, s: &NormalizedRewardVector, pi: &IncentiveVector) -> Result<f64> {
    let a = best_response(s, pi)?;
    Ok(inst.theta0()[a.index()] - pi.total())
}

/// Agent's true utility when playing `s` under `pi`.
fn agent_utility(inst: &ProblemInstance, s: &NormalizedRewardVector, pi: &IncentiveVector) -> Result<f64> {
    let a = best_response(s, pi)?;
    Ok(inst.s0()[a.index()] + pi[a.index()])
}

fn vector(inst: &ProblemInstance, v: &[f64]) -> Result<NormalizedRewardVector> {
    NormalizedRewardVector::new(v.to_vec(), inst.box_half_width())
}

pub fn run_golden_checks() -> Result<Vec<GoldenCheck>> {
    let mut c = Checks::default();

    let ex1 = Preset::Example1.instance();
    let zero = IncentiveVector::zeros(3);
    c.eq("ex1 truthful choice under (0,0,0)", 2, best_response(ex1.s0(), &zero)?.one_based());
    c.num("ex1 truthful principal net reward", 8.0, principal_net(&ex1, ex1.s0(), &zero)?);
    c.num("ex1 truthful agent utility", 4.0, agent_utility(&ex1, ex1.s0(), &zero)?);

    let pretend = vector(&ex1, &[0.0, 4.0, 9.5])?;
    let pretender = AgentBehavior::pretending(pretend.clone());
    c.eq("ex1 pretender choice under (0,0,0)", 3, pretender.act(&zero)?.one_based());
    c.num("ex1 principal net under (0,0,0) vs pretender", 2.0, principal_net(&ex1, &pretend, &zero)?);
    let offer = IncentiveVector::new(vec![0.0, 5.9, 0.0]);
    c.eq("ex1 pretender choice under (0,5.9,0)", 2, pretender.act(&offer)?.one_based());
    c.eq("ex1 (s, pi~) feasible", true, rent_feasible(&ex1, &pretend, &offer)?);
    // net reward and utility at the minimal price of steering the pretender to arm 2
    let steer_price = pretend.max() - pretend[1];
    c.num(
        "ex1 principal net at minimal steering price",
        2.5,
        steered_net_values(ex1.theta0(), &pretend)[1],
    );
    c.num("ex1 agent utility at minimal steering price", 9.5, ex1.s0()[1] + steer_price);
    let truthful_utility = agent_utility(&ex1, ex1.s0(), &zero)?;
    c.num("ex1 information rent", 5.5, (ex1.s0()[1] + steer_price) - truthful_utility);

    let o1 = oracle_incentives(&ex1);
    c.eq("ex1 oracle arm", 2, o1.arm.one_based());
    c.num("ex1 oracle value", 8.0 - ex1.varsigma(), o1.value);
    let k1 = construct_rent(&ex1)?;
    c.num("ex1 construction Q1", 6.0, k1.q);
    c.num("ex1 construction pretended s_3", 9.8, k1.s_pretend[2]);
    c.vec("ex1 construction incentives", &[0.0, 5.9, 0.0], k1.pi_expected.as_slice());
    c.num("ex1 construction rent gain", 5.8, rent_gain(&ex1, &k1));

    let ex2 = Preset::Example2.instance();
    let o2 = oracle_incentives(&ex2);
    c.vec("ex2 truthful oracle incentives", &[0.0, 2.1, 0.0, 0.0], o2.incentives.as_slice());
    c.eq("ex2 truthful feasible", true, rent_feasible(&ex2, ex2.s0(), &o2.incentives)?);
    c.num("ex2 truthful principal net reward", 5.9, principal_net(&ex2, ex2.s0(), &o2.incentives)?);
    c.num("ex2 truthful agent utility", 6.1, agent_utility(&ex2, ex2.s0(), &o2.incentives)?);
    let k2 = construct_rent(&ex2)?;
    c.vec("ex2 construction pretended s", &[0.0, 4.0, 3.0, 7.8], k2.s_pretend.as_slice());
    c.vec("ex2 construction incentives", &[0.0, 3.9, 0.0, 0.0], k2.pi_expected.as_slice());
    c.eq("ex2 construction feasible", true, rent_feasible(&ex2, &k2.s_pretend, &k2.pi_expected)?);
    c.num(
        "ex2 construction principal net reward",
        4.1,
        principal_net(&ex2, &k2.s_pretend, &k2.pi_expected)?,
    );
    c.num(
        "ex2 construction agent utility",
        7.9,
        agent_utility(&ex2, &k2.s_pretend, &k2.pi_expected)?,
    );
    c.num("ex2 information rent", 1.8, rent_gain(&ex2, &k2));

    let t5 = Preset::Table1N5.instance();
    let o5 = oracle_incentives(&t5);
    c.vec("table1_n5 steered net values", &[14.0, -52.0, -19.0, 16.0, 15.0], &o5.net_values);
    c.eq("table1_n5 oracle arm", 4, o5.arm.one_based());
    c.num("table1_n5 oracle incentive", 10.0 + t5.varsigma(), o5.incentives[3]);
    c.num("table1_n5 oracle value", 16.0 - t5.varsigma(), o5.value);

    Ok(c.0)
}
