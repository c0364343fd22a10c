#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skelrob/classifier.hpp"
#include "skelrob/skeldata.hpp"
#include "skelrob/tensor.hpp"

namespace skelrob::attack {

enum class Method { FGSM, PGD, BIM, MIFGSM, GN };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct AttackConfig {
    Method method = Method::FGSM;
    double epsilon = 8.0 / 255.0; // l-inf ball radius / FGSM magnitude
    double step_size = 2.0 / 255.0;
    int steps = 10;
    double decay = 1.0; // MIFGSM
    double gn_magnitude = 1.0;
    double gn_stdev = 0.1;
    double clip_lo = -1.0, clip_hi = 1.0;
    uint64_t seed = 0;

    void validate() const;
};

// Table-style defaults per method: PGD/BIM/MIFGSM with eps 8/255, step 2/255,
// 10 steps (decay 1.0 for MIFGSM); GN with magnitude 1, stdev 0.1.
AttackConfig default_config(Method m);

struct AttackTestSet {
    num::Tensor x;      // [N, C, T, J]
    std::vector<int> y; // identical to the source test labels (untargeted)
    Method method = Method::FGSM;
    AttackConfig config;
    int source_fold = -1;
};

// Single-step sign attack: clip(X + eps * sign(dL/dX), clip range).
num::Tensor fgsm(const Classifier& model, const num::Tensor& x_test,
                 const std::vector<int>& y_test, double epsilon, double clip_lo = -1.0,
                 double clip_hi = 1.0);

// PGD / BIM / MIFGSM. BIM starts at X; PGD adds a seeded uniform start in the
// eps-ball; MIFGSM accumulates an l1-normalized momentum (zero-gradient
// samples leave the momentum unchanged). Every step projects onto the
// eps-ball around X and clips to the data range.
num::Tensor iterative_attack(const Classifier& model, const num::Tensor& x_test,
                             const std::vector<int>& y_test, const AttackConfig& config);

num::Tensor gaussian_noise_attack(const num::Tensor& x_test, double magnitude, double stdev,
                                  uint64_t seed, double clip_lo = -1.0, double clip_hi = 1.0);

AttackTestSet build_attack_test_set(const Classifier& model, const num::Tensor& x_test,
                                    const std::vector<int>& y_test, const AttackConfig& config,
                                    int source_fold = -1);

double attack_success_rate(const Classifier& model, const AttackTestSet& set);
inline double robustness(double success_rate) { return 1.0 - success_rate; }

// Attack sets persist as SKL1 datasets plus a JSON provenance sidecar.
void write_attack_set(const AttackTestSet& set, int num_classes, const std::string& path);
AttackTestSet read_attack_set(const std::string& path);

} // namespace skelrob::attack
