// Memory node: serves clients until SIGINT/SIGTERM.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "farview/server/server.hpp"

int main(int argc, char** argv) {
  using farview::server::ServerConfig;

  CLI::App app{"farview-node: disaggregated memory node with operator offload"};
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint32_t> regions, channels, mtu, window;
  std::optional<std::string> listen;
  bool dump = false;
  app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--regions", regions, "dynamic regions (concurrent connections)");
  app.add_option("--channels", channels, "memory channels");
  app.add_option("--mtu", mtu, "packet payload size in bytes");
  app.add_option("--credit-window", window, "credits per queue pair");
  app.add_option("--listen", listen, "host:port to listen on");
  app.add_option("--set", overrides, "any config key, as key=value (repeatable)");
  app.add_flag("--dump-config", dump, "print the effective configuration and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    ServerConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw farview::Error(farview::ErrorCode::kConfig, "--set expects key=value");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (regions) cfg.set("regions", std::to_string(*regions));
    if (channels) cfg.set("channels", std::to_string(*channels));
    if (mtu) cfg.set("mtu", std::to_string(*mtu));
    if (window) cfg.set("credit_window", std::to_string(*window));
    if (listen) cfg.set("listen", *listen);
    cfg.validate();
    if (dump) {
      std::cout << cfg.dump();
      return 0;
    }

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    std::signal(SIGPIPE, SIG_IGN);

    farview::server::Server server(cfg);
    server.start();
    const auto host = farview::wire::NodeAddress::parse(cfg.listen).host;
    std::cout << "listening on " << host << ':' << server.port() << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    const auto st = server.stats();
    std::cerr << "served " << st.connections_accepted << " connections (" << st.connections_refused << " refused), "
              << st.farview_requests << " offloaded and " << st.rcpu_requests << " server-CPU requests\n";
  } catch (const std::exception& e) {
    std::cerr << "farview-node: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
