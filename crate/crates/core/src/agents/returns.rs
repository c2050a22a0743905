/// Discounted return of every step, computed backwards and restarted after
/// each `done`. The window's final step is not bootstrapped.
pub fn discounted_returns(rewards: &[f64], dones: &[bool], gamma: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), dones.len(), "rewards and dones must align");
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            acc = 0.0;
        }
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_discount_returns_rewards() {
        let r = [0.5, -1.0, 2.0];
        assert_eq!(discounted_returns(&r, &[false; 3], 0.0), r.to_vec());
    }

    #[test]
    fn half_discount() {
        assert_eq!(
            discounted_returns(&[1.0, 1.0, 1.0], &[false; 3], 0.5),
            vec![1.75, 1.5, 1.0]
        );
    }

    #[test]
    fn done_resets_accumulation() {
        assert_eq!(discounted_returns(&[1.0, 1.0], &[true, false], 0.9), vec![1.0, 1.0]);
    }
}
