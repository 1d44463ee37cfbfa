"""The entire-space profile with U(0) = 1, its power-law far field and the
truncated-ball certificate of instability."""

from mems_branch.limit import instability_certificate, shoot

for N, alpha in [(2, 0.0), (5, 0.0), (7, 0.0), (8, 1.0)]:
    prof = shoot(N, alpha)
    mus = [instability_certificate(prof, R)[0] for R in (10.0, 30.0, 100.0)]
    print(f"N = {N}, alpha = {alpha}: K_hat / K = {prof.amplitude_ratio:.4f}, "
          f"mu1 on B_10, B_30, B_100 = {mus[0]:.4f}, {mus[1]:.4f}, {mus[2]:.4f} -> {prof.certificate}")
