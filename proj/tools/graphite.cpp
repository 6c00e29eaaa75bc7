#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphite/graphite.hpp"
#include "graphite/server/http_service.hpp"
#include "graphite/server/jobs.hpp"
#include "graphite/server/session_server.hpp"

namespace {

using namespace graphite;

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << bytes;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? v : fallback;
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphite: 3D network layout and shared-session server"};
  app.require_subcommand(1);

  // ingest
  std::string ingest_file;
  auto* ingest = app.add_subcommand("ingest", "Validate a graph document and print ingest statistics");
  ingest->add_option("file", ingest_file, "Interchange document ('-' for stdin)")->required();

  // layout
  std::string layout_file;
  std::string layout_out;
  LayoutParams lp;
  std::uint64_t community_seed = 0;
  auto* layout = app.add_subcommand("layout", "Lay out, cluster and annotate a graph");
  layout->add_option("file", layout_file, "Interchange document ('-' for stdin)")->required();
  layout->add_option("--iters", lp.max_iterations, "Annealing iterations")->capture_default_str();
  layout->add_option("--cooling", lp.cooling_exponent, "Cooling exponent")->capture_default_str();
  layout->add_option("--seed", lp.rng_seed, "Layout seed")->capture_default_str();
  layout->add_option("--community-seed", community_seed, "Community detection seed")->capture_default_str();
  layout->add_option("--out,-o", layout_out, "Output file (default stdout)");

  // sample
  std::string sample_file;
  std::string sample_out;
  std::string scheme = "rn";
  SampleSpec spec;
  auto* sample_cmd = app.add_subcommand("sample", "Down-sample a graph");
  sample_cmd->add_option("file", sample_file, "Interchange document ('-' for stdin)")->required();
  sample_cmd->add_option("--scheme", scheme, "rn | re | rw")->check(CLI::IsMember({"rn", "re", "rw"}));
  sample_cmd->add_option("--p", spec.p, "Inclusion (rn/re) or restart (rw) probability")->capture_default_str();
  sample_cmd->add_option("--fraction", spec.target_fraction, "Fraction of vertices to visit (rw)")
      ->capture_default_str();
  sample_cmd->add_option("--seed", spec.rng_seed, "Sampling seed")->capture_default_str();
  sample_cmd->add_option("--out,-o", sample_out, "Output file (default stdout)");

  // serve
  int http_port = std::stoi(env_or("GRAPHITE_HTTP_PORT", "8080"));
  int udp_port = std::stoi(env_or("GRAPHITE_UDP_PORT", "9090"));
  std::string data_dir = env_or("GRAPHITE_DATA_DIR", "./graphite-data");
  std::string host = "0.0.0.0";
  bool master_mode = false;
  std::size_t mtu = protocol::kDefaultMtu;
  auto* serve = app.add_subcommand("serve", "Run the analysis server and session relay");
  serve->add_option("--http-port", http_port, "HTTP port (env GRAPHITE_HTTP_PORT)")->capture_default_str();
  serve->add_option("--udp-port", udp_port, "UDP session port (env GRAPHITE_UDP_PORT)")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "Catalogue and blob directory (env GRAPHITE_DATA_DIR)")
      ->capture_default_str();
  serve->add_option("--host", host, "HTTP bind address")->capture_default_str();
  serve->add_option("--mtu", mtu, "Datagram MTU")->capture_default_str();
  serve->add_flag("--master-mode", master_mode, "Relay TRANSFORM only from the master client");

  // simulate
  netsim::Scenario sc;
  std::string latency = "0:0";
  std::string metrics_out;
  std::size_t hold = 15;
  auto* simulate = app.add_subcommand("simulate", "Run a simulated lossy session and report metrics");
  simulate->add_option("--clients", sc.clients, "Number of clients")->capture_default_str();
  simulate->add_option("--loss", sc.model.loss_rate, "Datagram loss probability")->capture_default_str();
  simulate->add_option("--latency", latency, "Latency range in ms, min:max")->capture_default_str();
  simulate->add_option("--reorder", sc.model.reorder_rate, "Reorder probability")->capture_default_str();
  simulate->add_option("--duplicate", sc.model.duplicate_rate, "Duplication probability")->capture_default_str();
  simulate->add_option("--ticks", sc.ticks, "Ticks to simulate")->capture_default_str();
  simulate->add_option("--hold", hold, "Final ticks the grabbing client holds still")->capture_default_str();
  simulate->add_option("--seed", sc.model.rng_seed, "Network seed")->capture_default_str();
  simulate->add_option("--budget", sc.server_budget, "Server datagrams per tick (0 = unlimited)");
  simulate->add_flag("--lossy-uplink", sc.lossy_uplink, "Apply the model to client->server traffic too");
  simulate->add_flag("--master-mode", sc.master_mode, "Relay TRANSFORM only from client 0");
  simulate->add_option("--out", metrics_out, "Metrics JSON file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto [g, report] = load_graph(read_input(ingest_file));
      nlohmann::json hist = nlohmann::json::object();
      for (const auto& [d, c] : degree_distribution(g).counts) hist[std::to_string(d)] = c;
      nlohmann::json out = {{"nodes", g.vertex_count()},
                            {"edges", g.edge_count()},
                            {"directed", g.directed()},
                            {"self_loops_dropped", report.self_loops_dropped},
                            {"duplicates_merged", report.duplicates_merged},
                            {"degree_histogram", hist}};
      std::cout << out.dump(2) << '\n';
    } else if (*layout) {
      server::JobParams params;
      params.layout = lp;
      params.community_seed = community_seed;
      params.validate();
      write_output(layout_out, server::compute_annotated_layout(read_input(layout_file), params));
    } else if (*sample_cmd) {
      spec.scheme = parse_scheme(scheme);
      const Graph g = load_graph(read_input(sample_file)).graph;
      const Sample s = sample(g, spec);
      std::cerr << "kept " << s.graph.vertex_count() << "/" << g.vertex_count() << " vertices, "
                << s.graph.edge_count() << "/" << g.edge_count() << " edges";
      if (!s.complete) std::cerr << " (step cap reached before target fraction)";
      if (!s.graph.empty() && !g.empty()) {
        std::cerr << ", degree KS " << ks_distance(degree_distribution(g), degree_distribution(s.graph));
      }
      std::cerr << '\n';
      write_output(sample_out, serialize(s.graph));
    } else if (*serve) {
      server::JobManager jobs(data_dir);
      server::SessionServer session(HubConfig{mtu, master_mode, std::nullopt});
      const auto bound_udp = session.start_udp(static_cast<std::uint16_t>(udp_port));
      server::HttpService http(jobs, session);
      const int bound_http = http.start(host, http_port);
      std::cerr << "graphite: http on " << host << ":" << bound_http << ", udp on " << bound_udp << ", data in "
                << data_dir << (master_mode ? ", master mode" : "") << '\n';
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      http.stop();
      session.stop_udp();
    } else if (*simulate) {
      const auto colon = latency.find(':');
      if (colon == std::string::npos) throw ValidationError("--latency expects min:max");
      sc.model.latency_min_ms = std::stod(latency.substr(0, colon));
      sc.model.latency_max_ms = std::stod(latency.substr(colon + 1));
      sc.scripts = netsim::grab_and_hold_scripts(sc.clients, sc.ticks, hold);
      write_output(metrics_out, netsim::run_scenario(sc).to_json().dump(2));
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
