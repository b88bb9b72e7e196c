#include <benchmark/benchmark.h>

#include "sld/stability.hpp"
#include "sld/tool_model.hpp"
#include "sld/uncertainty.hpp"

namespace {

using namespace sld;

tool::ModeSet modes() {
    tool::Mode m;
    m.natural_frequency = 800.0;
    m.damping_ratio = 0.02;
    m.modal_stiffness = 2.0e7;
    tool::Mode y = m;
    y.direction = tool::Direction::Y;
    return {m, y};
}

cutting::CoefficientSet coefficients() {
    cutting::CoefficientSet c;
    c.kt = 600e6;
    c.kr = 0.3;
    c.kt_uncertainty = uq::relative_uniform(c.kt, 0.2);
    c.kr_uncertainty = uq::relative_uniform(c.kr, 0.1);
    return c;
}

stability::SweepConfig sweep(int n_freq) {
    stability::SweepConfig s;
    s.f_min_hz = 400.0;
    s.f_max_hz = 1200.0;
    s.n_freq = n_freq;
    s.k_max = 5;
    return s;
}

const cutting::CutSpec kSlot{cutting::MillingMode::Slot, 1.0, 2};

void BM_ZoaLobes(benchmark::State& state) {
    const auto s = sweep(static_cast<int>(state.range(0)));
    const auto frf = tool::synthesize_frf(modes(), stability::linspace(s.f_min_hz, s.f_max_hz, s.n_freq));
    for (auto _ : state) benchmark::DoNotOptimize(stability::zoa_lobes(frf, kSlot, coefficients(), s));
}
BENCHMARK(BM_ZoaLobes)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FdmProbe(benchmark::State& state) {
    const auto m = modes();
    for (auto _ : state)
        benchmark::DoNotOptimize(
            stability::fdm_spectral_radius({12000.0, 1e-3}, m, kSlot, coefficients(), static_cast<int>(state.range(0))));
}
BENCHMARK(BM_FdmProbe)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_UncertaintyBand(benchmark::State& state) {
    const auto s = sweep(2000);
    uq::UncertaintySpec spec;
    spec.kt = coefficients().kt_uncertainty;
    spec.kr = coefficients().kr_uncertainty;
    const auto scenarios = uq::draw_scenarios({coefficients(), modes()}, spec, static_cast<int>(state.range(0)), 42);
    const auto grid = stability::linspace(s.f_min_hz, s.f_max_hz, s.n_freq);
    uq::BandConfig cfg;
    cfg.sweep = s;
    const uq::FrfBuilder builder = [&](const uq::Scenario& sc) { return tool::synthesize_frf(sc.modes, grid); };
    for (auto _ : state) benchmark::DoNotOptimize(uq::compute_band(scenarios, kSlot, builder, cfg));
}
BENCHMARK(BM_UncertaintyBand)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
