// Fits a polynomial chaos expansion and a Matern GP to 20 runs of the toy
// function and scores both on 1000 Latin hypercube points.
#include <cstdio>

#include "uqbench/designs.hpp"
#include "uqbench/gp.hpp"
#include "uqbench/polychaos.hpp"
#include "uqbench/simulators.hpp"
#include "uqbench/validation.hpp"

using namespace uqbench;

namespace {

void print(const char* name, const validation::MetricsReport& r) {
    std::printf("%-10s rmse %.4f  mean %.4f [%.4f, %.4f]  sd %.4f [%.4f, %.4f]\n", name, r.rmse.point, r.mean.point,
                r.mean.lo, r.mean.hi, r.sd.point, r.sd.lo, r.sd.hi);
}

}  // namespace

int main() {
    sim::ToySimulator toy;

    const Design train = sobol(20, 2, 42);
    const auto y = toy.run(train.points);

    validation::ValidationSet vset{latin_hypercube(1000, 2, 7), {}};
    vset.outputs = toy.run(vset.design.points);
    const auto ref = validation::simulator_reference(vset);
    std::printf("%-10s mean %.4f  sd %.4f\n", "simulator", ref.mean.point, ref.sd.point);

    const auto pce_model = pce::fit_regression(train, y, pce::Basis(2, pce::TruncationScheme::total_order(3)));
    print("pce p=3", validation::evaluate_surrogate([&](std::span<const double> z) { return pce_model.predict(z); }, vset, ref));

    const auto gp_model = gp::fit(train, y, gp::KernelFamily::Matern52);
    print("gp matern", validation::gp_metric_intervals(gp_model, vset, ref));
    return 0;
}
