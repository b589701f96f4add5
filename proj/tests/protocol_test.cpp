#include <gtest/gtest.h>

#include "gwsus/protocol.hpp"

namespace gwsus {
namespace {

constexpr double kBw = 1048576.0;

UpdateArtifact artifact(std::uint32_t id, double release = 0.0) {
  return {UpdateId{id}, UpdateClassification::Security, kDefaultMetadataBytes, kDefaultPayloadBytes, release};
}

std::size_t count_kind(const StepOutput& out, MessageKind kind) {
  return static_cast<std::size_t>(
      std::count_if(out.messages.begin(), out.messages.end(), [kind](const Message& m) { return m.kind == kind; }));
}

Message arrival_of(const StepOutput& out, MessageKind kind) {
  for (const Message& m : out.messages) {
    if (m.kind == kind) return m;
  }
  ADD_FAILURE() << "no " << to_string(kind) << " emitted";
  return {};
}

// origin(0) -> server(1) -> {server(2), client(3)}; server(2) -> client(4)
struct Fixture {
  Topology topo;
  NodeId origin, s1, s2, c1, c2;

  Fixture() {
    origin = topo.add_node(NodeKind::Origin, default_server_power());
    s1 = topo.add_node(NodeKind::UpdateServer, default_server_power());
    s2 = topo.add_node(NodeKind::UpdateServer, default_server_power());
    c1 = topo.add_node(NodeKind::Client, default_client_power());
    c2 = topo.add_node(NodeKind::Client, default_client_power());
    topo.register_node(s1, origin, kBw);
    topo.register_node(s2, s1, kBw);
    topo.register_node(c1, s1, kBw);
    topo.register_node(c2, s2, kBw);
  }
};

TEST(TransferTime, UnitAndHandDivisions) {
  Message m;
  m.size = 0;
  EXPECT_DOUBLE_EQ(transfer_time(m, 1.0), 1.0);
  m.size = 1;
  EXPECT_DOUBLE_EQ(transfer_time(m, 1.0), 1.0);
  m.size = 10 * 1048576;
  EXPECT_DOUBLE_EQ(transfer_time(m, 1048576.0), 10.0);
  m.size = 64;
  EXPECT_DOUBLE_EQ(transfer_time(m, 1048576.0), 64.0 / 1048576.0);
  EXPECT_NEAR(transfer_time(m, 1048576.0), 6.10e-5, 1e-7);
  try {
    transfer_time(m, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroBandwidth);
  }
}

TEST(PollSchedule, DailyAtFifteenHundredOverAWeek) {
  const auto times = poll_times(PollSchedule{}, 7 * 86400.0);
  ASSERT_EQ(times.size(), 7u);
  for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(times[k], 54000.0 + k * 86400.0);
  EXPECT_THROW(validate(PollSchedule{86400.0, 86400.0}), Error);
  EXPECT_THROW(validate(PollSchedule{0.0, 0.0}), Error);
}

TEST(MessageSizes, SignalMustBeSmallest) {
  MessageSizes s;
  EXPECT_NO_THROW(validate(s));
  s.signal = 1024;
  EXPECT_THROW(validate(s), Error);
}

TEST(BroadcastSignal, FanOutEqualsChildCount) {
  Topology t;
  const NodeId o = t.add_node(NodeKind::Origin, default_server_power());
  const ProtocolContext empty_ctx{t, ProtocolMode::Push, {}, AutoApproveAll{}, {}};
  EXPECT_TRUE(broadcast_signal(empty_ctx, o, {UpdateId{1}}).empty());
  for (int i = 0; i < 3; ++i) {
    const NodeId s = t.add_node(NodeKind::UpdateServer, default_server_power());
    t.register_node(s, o, kBw);
  }
  const ProtocolContext ctx{t, ProtocolMode::Push, {}, AutoApproveAll{}, {}};
  const auto msgs = broadcast_signal(ctx, o, {UpdateId{1}});
  ASSERT_EQ(msgs.size(), 3u);
  for (const Message& m : msgs) {
    EXPECT_EQ(m.kind, MessageKind::UpdateSignal);
    EXPECT_EQ(m.size, 64u);
    EXPECT_EQ(m.src, o);
  }
}

// Drives one node's exchange with its parent by feeding each emitted message
// back as an arrival until the exchange settles.
StepOutput deliver(const ProtocolContext& ctx, ProtocolState& st, const Message& msg, double now = 60000.0) {
  return apply_event(ctx, st, Event{now, 0, MessageArrival{msg}});
}

TEST(Pull, EmptyParentCatalogGivesEmptyResponse) {
  Fixture f;
  const ProtocolContext ctx{f.topo, ProtocolMode::Pull, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(f.topo);
  const StepOutput poll = apply_event(ctx, st, Event{54000.0, 0, PollFire{f.s1}});
  ASSERT_EQ(poll.messages.size(), 1u);
  EXPECT_EQ(poll.messages[0].kind, MessageKind::PollCheck);
  EXPECT_EQ(poll.messages[0].dst, f.origin);
  ASSERT_EQ(poll.timers.size(), 1u);
  EXPECT_EQ(poll.timers[0].time, 54000.0 + 86400.0);

  const StepOutput resp = deliver(ctx, st, poll.messages[0]);
  const Message r = arrival_of(resp, MessageKind::CatalogResponse);
  EXPECT_TRUE(r.entries.empty());
  EXPECT_EQ(r.size, 256u);
  const StepOutput after = deliver(ctx, st, r);
  EXPECT_EQ(count_kind(after, MessageKind::DownloadRequest), 0u);
  EXPECT_FALSE(st.nodes[f.s1.value].syncing());
}

TEST(Pull, UnseenUpdateIsDownloaded) {
  Fixture f;
  const ProtocolContext ctx{f.topo, ProtocolMode::Pull, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(f.topo);
  apply_event(ctx, st, Event{10.0, 0, Publish{{artifact(1, 10.0)}}});
  const StepOutput poll = apply_event(ctx, st, Event{54000.0, 1, PollFire{f.s1}});
  const Message r = arrival_of(deliver(ctx, st, poll.messages[0]), MessageKind::CatalogResponse);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.size, 256u + kDefaultMetadataBytes);
  const StepOutput dl = deliver(ctx, st, r);
  const Message req = arrival_of(dl, MessageKind::DownloadRequest);
  EXPECT_EQ(req.ids, std::vector<UpdateId>{UpdateId{1}});
  EXPECT_EQ(st.nodes[f.s1.value].inventory.needed, std::set<UpdateId>{UpdateId{1}});

  const Message payload = arrival_of(deliver(ctx, st, req), MessageKind::DownloadPayload);
  EXPECT_EQ(payload.size, kDefaultPayloadBytes);
  const StepOutput done = deliver(ctx, st, payload);
  EXPECT_EQ(count_kind(done, MessageKind::StatusReport), 1u);
  EXPECT_EQ(count_kind(done, MessageKind::UpdateSignal), 0u);  // pull never signals
  EXPECT_TRUE(st.nodes[f.s1.value].inventory.installed.contains(UpdateId{1}));
}

TEST(Pull, ServerHoldsChildCheckUntilItsSyncCompletes) {
  Fixture f;
  const ProtocolContext ctx{f.topo, ProtocolMode::Pull, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(f.topo);
  apply_event(ctx, st, Event{10.0, 0, Publish{{artifact(1, 10.0)}}});
  const Message server_check = apply_event(ctx, st, Event{54000.0, 1, PollFire{f.s1}}).messages[0];
  const Message client_check = apply_event(ctx, st, Event{54000.0, 2, PollFire{f.c1}}).messages[0];

  EXPECT_TRUE(deliver(ctx, st, client_check).messages.empty());  // held
  const Message r = arrival_of(deliver(ctx, st, server_check), MessageKind::CatalogResponse);
  const Message req = arrival_of(deliver(ctx, st, r), MessageKind::DownloadRequest);
  const Message payload = arrival_of(deliver(ctx, st, req), MessageKind::DownloadPayload);
  const StepOutput done = deliver(ctx, st, payload);
  // StatusReport upstream, then the held check is answered with the new entry.
  ASSERT_EQ(done.messages.size(), 2u);
  EXPECT_EQ(done.messages[1].kind, MessageKind::CatalogResponse);
  EXPECT_EQ(done.messages[1].dst, f.c1);
  EXPECT_EQ(done.messages[1].entries.size(), 1u);
}

TEST(Push, PublishSignalsEveryOriginChild) {
  Fixture f;
  const ProtocolContext ctx{f.topo, ProtocolMode::Push, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(f.topo);
  const StepOutput out = apply_event(ctx, st, Event{10.0, 0, Publish{{artifact(1, 10.0)}}});
  ASSERT_EQ(out.messages.size(), 1u);
  EXPECT_EQ(out.messages[0].kind, MessageKind::UpdateSignal);
  EXPECT_EQ(out.messages[0].dst, f.s1);
}

TEST(Push, ClientSignalLeadsToCatalogRequestThenDownload) {
  Topology t;
  const NodeId o = t.add_node(NodeKind::Origin, default_server_power());
  const NodeId c = t.add_node(NodeKind::Client, default_client_power());
  t.register_node(c, o, kBw);
  const ProtocolContext ctx{t, ProtocolMode::Push, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(t);
  const Message signal = apply_event(ctx, st, Event{10.0, 0, Publish{{artifact(1, 10.0)}}}).messages.at(0);
  const StepOutput req = deliver(ctx, st, signal);
  ASSERT_EQ(req.messages.size(), 1u);
  EXPECT_EQ(req.messages[0].kind, MessageKind::CatalogRequest);
  const Message r = arrival_of(deliver(ctx, st, req.messages[0]), MessageKind::CatalogResponse);
  EXPECT_EQ(count_kind(deliver(ctx, st, r), MessageKind::DownloadRequest), 1u);
}

TEST(Push, DuplicateSignalIsIdempotent) {
  Topology t;
  const NodeId o = t.add_node(NodeKind::Origin, default_server_power());
  const NodeId c = t.add_node(NodeKind::Client, default_client_power());
  t.register_node(c, o, kBw);
  const ProtocolContext ctx{t, ProtocolMode::Push, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(t);
  publish(st.origin, artifact(1));
  st.nodes[c.value].catalog.insert(artifact(1));
  st.nodes[c.value].inventory.installed.insert(UpdateId{1});
  const Message signal{MessageKind::UpdateSignal, 64, o, c, {UpdateId{1}}, {}, false};
  const Message req = deliver(ctx, st, signal).messages.at(0);
  EXPECT_EQ(req.kind, MessageKind::CatalogRequest);
  const Message r = arrival_of(deliver(ctx, st, req), MessageKind::CatalogResponse);
  EXPECT_TRUE(r.entries.empty());
  EXPECT_TRUE(deliver(ctx, st, r).messages.empty());
}

TEST(Push, ServerDownloadsOnlyMissingThenSignalsChildrenForAll) {
  Fixture f;
  const ProtocolContext ctx{f.topo, ProtocolMode::Push, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(f.topo);
  publish(st.origin, artifact(1));
  publish(st.origin, artifact(2));
  st.nodes[f.s1.value].catalog.insert(artifact(1));
  st.nodes[f.s1.value].inventory.installed.insert(UpdateId{1});

  const Message signal{MessageKind::UpdateSignal, 64, f.origin, f.s1, {UpdateId{1}, UpdateId{2}}, {}, false};
  const Message req = deliver(ctx, st, signal).messages.at(0);
  const Message r = arrival_of(deliver(ctx, st, req), MessageKind::CatalogResponse);
  ASSERT_EQ(r.entries.size(), 1u);
  const StepOutput dl = deliver(ctx, st, r);
  ASSERT_EQ(count_kind(dl, MessageKind::DownloadRequest), 1u);
  EXPECT_EQ(arrival_of(dl, MessageKind::DownloadRequest).ids, std::vector<UpdateId>{UpdateId{2}});
  EXPECT_EQ(count_kind(dl, MessageKind::UpdateSignal), 0u);  // not before the payload lands

  const Message payload = arrival_of(deliver(ctx, st, arrival_of(dl, MessageKind::DownloadRequest)),
                                     MessageKind::DownloadPayload);
  const StepOutput done = deliver(ctx, st, payload);
  ASSERT_EQ(count_kind(done, MessageKind::UpdateSignal), 2u);  // s2 and c1
  for (const Message& m : done.messages) {
    if (m.kind == MessageKind::UpdateSignal) {
      EXPECT_EQ(m.ids, (std::vector<UpdateId>{UpdateId{1}, UpdateId{2}}));
    }
  }
}

TEST(Push, DelayedApprovalSchedulesRecheck) {
  Topology t;
  const NodeId o = t.add_node(NodeKind::Origin, default_server_power());
  const NodeId c = t.add_node(NodeKind::Client, default_client_power());
  t.register_node(c, o, kBw);
  const ProtocolContext ctx{t, ProtocolMode::Push, {}, AutoApproveAfterDelay{3600.0}, {}};
  ProtocolState st = initial_state(t);
  const Message signal = apply_event(ctx, st, Event{10.0, 0, Publish{{artifact(1, 10.0)}}}).messages.at(0);
  const Message req = deliver(ctx, st, signal, 10.0).messages.at(0);
  const Message r = arrival_of(deliver(ctx, st, req, 10.0), MessageKind::CatalogResponse);
  const StepOutput gated = deliver(ctx, st, r, 10.0);
  EXPECT_EQ(count_kind(gated, MessageKind::DownloadRequest), 0u);
  ASSERT_EQ(gated.timers.size(), 1u);
  EXPECT_EQ(gated.timers[0].time, 3610.0);
  const StepOutput woke = apply_event(ctx, st, Event{3610.0, 9, ApprovalRecheck{c}});
  EXPECT_EQ(count_kind(woke, MessageKind::DownloadRequest), 1u);
}

TEST(Step, PureTransition) {
  Fixture f;
  const ProtocolContext ctx{f.topo, ProtocolMode::Push, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(f.topo);
  const Event ev{5.0, 3, Publish{{artifact(1, 5.0)}}};
  const auto [s1, o1] = run_protocol_step(ctx, st, ev);
  const auto [s2, o2] = run_protocol_step(ctx, st, ev);
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(o1, o2);
  EXPECT_EQ(st, initial_state(f.topo));  // input untouched
}

TEST(Step, EveryMessageHasMatchingTxAndRx) {
  Fixture f;
  const ProtocolContext ctx{f.topo, ProtocolMode::Push, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(f.topo);
  const StepOutput out = apply_event(ctx, st, Event{0.0, 0, Register{f.s1}});
  ASSERT_EQ(out.phases.size(), 2 * out.messages.size());
  for (std::size_t i = 0; i < out.messages.size(); ++i) {
    EXPECT_EQ(out.phases[2 * i].node, out.messages[i].src);
    EXPECT_EQ(out.phases[2 * i].phase, Phase::Tx);
    EXPECT_EQ(out.phases[2 * i + 1].node, out.messages[i].dst);
    EXPECT_EQ(out.phases[2 * i + 1].phase, Phase::Rx);
    EXPECT_EQ(out.phases[2 * i].duration, out.phases[2 * i + 1].duration);
    EXPECT_EQ(out.phases[2 * i].duration, transfer_time(out.messages[i], kBw));
  }
}

TEST(Step, ModeMismatchIsUnknownEvent) {
  Fixture f;
  const ProtocolContext push{f.topo, ProtocolMode::Push, {}, AutoApproveAll{}, {}};
  const ProtocolContext pull{f.topo, ProtocolMode::Pull, {}, AutoApproveAll{}, {}};
  ProtocolState st = initial_state(f.topo);
  try {
    apply_event(push, st, Event{0.0, 0, PollFire{f.s1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownEvent);
  }
  const Message signal{MessageKind::UpdateSignal, 64, f.origin, f.s1, {UpdateId{1}}, {}, false};
  EXPECT_THROW(apply_event(pull, st, Event{0.0, 0, MessageArrival{signal}}), Error);
}

}  // namespace
}  // namespace gwsus
