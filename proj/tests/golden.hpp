#pragma once

// Frozen outputs of tests/oracles/oracles.py (numpy/scipy, no shared code).

namespace golden {

// Mathieu operator 0.5 d^2/dx^2 + theta cos(2 pi x) + theta^2/2, central differences, n = 256.
inline constexpr double mathieu_theta[] = {0.25, 0.5, 1.0, 2.0};
inline constexpr double mathieu_mu_n256[] = {0.03283311186657705, 0.13133111507928658, 0.5253031889407574,
                                             2.100875392153456};
// Fourier-basis top eigenvalue (continuum operator).
inline constexpr double mathieu_mu_continuum[] = {0.03283303241720186, 0.13133079740108033, 0.5253019209927966,
                                                  2.100870363579723};
// mu'' at theta = 0, 0.5, 1 from second-order perturbation theory, n = 256.
inline constexpr double mathieu_d2_theta[] = {0.0, 0.5, 1.0};
inline constexpr double mathieu_d2_n256[] = {1.0506631350292823, 1.0505779241263298, 1.0503237933850538};

inline constexpr double mathieu_a = 0.3;
inline constexpr double mathieu_theta_a = 0.2855364751049816;
inline constexpr double mathieu_I = 0.04283028225026328;
inline constexpr double mathieu_Isecond = 0.9518050486540294;
inline constexpr double mathieu_D0 = 1.382691373276511;
// Bromwich integral with dense complex expm, n = 256.
inline constexpr double mathieu_tail_a03_t30 = 0.05545116236349252;

// |mu_512 - mu_256| at theta = 0, 0.5, 1, theta_a.
inline constexpr double mathieu_grid_doubling[] = {4.9003190668314726e-11, 2.3827682196775335e-07,
                                                   9.509745886315812e-07, 7.773679069900119e-08};

// P(N(0, 16) >= 16).
inline constexpr double gaussian_tail_a1_t16 = 3.167124183311986e-05;
// Mills ratio: e^{t/2} P(N(0,t) >= t) ~ sum_k D_k t^{-(k+1/2)}.
inline constexpr double gaussian_D[] = {0.3989422804014327, -0.3989422804014327, 1.1968268412042982};

// Fair +-1 walk, binomial tails P(S_n >= a n).
struct ChainCase {
  int n;
  double a;
  double p;
};
inline constexpr ChainCase two_state[] = {
    {10, 0.2, 0.376953125},         {10, 0.6, 0.0546875},           {20, 0.2, 0.2517223358154297},
    {20, 0.6, 0.005908966064453125}, {40, 0.2, 0.13409362552738457}, {40, 0.6, 9.108291487791575e-05},
};

// (1 - p)^1e5 for p = P(N(0,16) >= 16): chance that a whole naive run of 1e5 paths sees no hit.
inline constexpr double naive_zero_hit_run_prob = 0.042122453728577175;

}  // namespace golden
