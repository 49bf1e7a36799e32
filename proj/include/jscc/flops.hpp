#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jscc/baseline.hpp"
#include "jscc/nets.hpp"
#include "jscc/pipeline.hpp"

namespace jscc {

/// Kernel multiply-accumulate count of one layer: M_h M_w F^2 K_out K_in.
/// K_in includes concatenated skip channels.
struct FlopsLayerEntry {
  std::string network;
  std::string layer;
  int m_h = 0, m_w = 0;
  int kernel = 0;
  int k_in = 0, k_out = 0;
  bool skip = false;
  std::int64_t flops = 0;
};

struct FlopsReport {
  std::string network;
  std::vector<FlopsLayerEntry> layers;
  std::int64_t total = 0;
};

inline FlopsReport flops_report(const NetworkSpec& net) {
  FlopsReport r;
  r.network = net.name;
  const auto resolved = net.resolve();
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    const auto& s = resolved[i];
    FlopsLayerEntry e{net.name, l.name, s.out_h, s.out_w, l.kernel, s.in_channels, s.out_channels,
                      s.skip_index >= 0, 0};
    e.flops = std::int64_t{e.m_h} * e.m_w * e.kernel * e.kernel * e.k_out * e.k_in;
    r.total += e.flops;
    r.layers.push_back(e);
  }
  return r;
}

/// Per-method complexity C = C_E + C_D, where the cGAN decoder cost includes
/// its discriminator.
struct MethodFlops {
  Method method = Method::g_unet;
  std::vector<FlopsReport> networks;
  std::int64_t total = 0;
};

inline MethodFlops method_flops(const RunSpec& spec, Method method, const ArchOptions& arch = {}) {
  MethodFlops m;
  m.method = method;
  if (method == Method::baseline) {
    auto [e, d] = build_baseline(spec, arch);
    m.networks = {flops_report(e), flops_report(d)};
  } else {
    m.networks = {flops_report(build_encoder(spec, arch)), flops_report(build_generator(spec, arch))};
    if (method == Method::cgan)
      m.networks.push_back(flops_report(
          build_discriminator({spec.image_height, spec.image_width, spec.image_channels}, arch)));
  }
  for (const auto& n : m.networks) m.total += n.total;
  return m;
}

}  // namespace jscc
