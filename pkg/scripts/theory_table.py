"""Closed-form numbers for the reference network: step sizes, bounds and costs."""

from diffnet.harness import ScenarioConfig, theory_for
from diffnet.theory import min_step_size_mu_s, op_cost


def main():
    cfg = ScenarioConfig.load("fig5")
    net = theory_for(cfg)["network"]
    print(f"V={net['V']} M={net['M']} sum|N_k|={net['sum_neighborhoods']} "
          f"m_min={net['m_min']:.2f} beta_r threshold={net['beta_mult_factor']:.4f}")
    s2 = net["sigma_max_sq"]
    print("beta_r   mu_s (delta_n=3000)")
    for b in (1.1, 1.6, 1.8, 2.1, 2.6, 3.1, 7, 10, 20):
        print(f"{b:6g}   {min_step_size_mu_s(4, b * s2, s2, 3000):.5f}")
    print(f"graph scenario: mu_s = {min_step_size_mu_s(4, 1.8 * 0.009, 0.009, 3000):.4f}")
    print("per-node cost, M=50, |N_k|=5: dNLMS", tuple(op_cost("dnlms_full", 50, 5)),
          " AS s=0", tuple(op_cost("as_dnlms", 50, 5, 0)),
          " AS s=1", tuple(op_cost("as_dnlms", 50, 5, 1)))


if __name__ == "__main__":
    main()
