"""Walk one raw message through the tolerant header parser.

The parser accepts any byte string. Folded lines unfold, repeated
fields keep their order, lines without a colon are counted rather than
raised, and serializing the parsed form is stable under another
parse/serialize pass.
"""

from headerscan import (extract_domain, parse_address_list, parse_date,
                        parse_headers, parse_received, serialize_headers)

RAW = (
    b"Received: from mx.orange.example (mx.orange.example [192.0.2.44])\r\n"
    b"\tby relay.blue.example with ESMTP id u7xK9q;\r\n"
    b"\tThu, 05 Oct 2006 11:02:14 -0500\r\n"
    b"Received: from [10.1.1.9] by mx.orange.example with SMTP;\r\n"
    b"\tThu, 05 Oct 2006 10:58:01 -0500 (CDT)\r\n"
    b'From: "Accounts Team" <accounts@orange.example>\r\n'
    b"Reply-To: accounts@orange.example\r\n"
    b"To: pat@blue.example, lee@blue.example\r\n"
    b"Subject: October invoice\r\n"
    b"Date: Thu, 05 Oct 2006 10:57:44 -0500\r\n"
    b"Message-ID: <20061005.155744.18237@orange.example>\r\n"
    b"Return-Path: <bounce@elsewhere.example>\r\n"
    b"X-Mailer: QuickSend 2.1\r\n"
    b"a line that forgot its colon\r\n"
    b"\r\n"
    b"Body text is never read; headers are the whole story here.\r\n"
)


def main() -> None:
    header = parse_headers(RAW)
    print(f"parsed {len(header.fields)} fields "
          f"({header.malformed_line_count} malformed lines tolerated)")
    for name in header.names():
        print(f"  {name}")

    print("\nrecipients on To:")
    for addr in parse_address_list(header.get("to") or ""):
        print(f"  {addr.local_part} @ {addr.domain}")

    stamp = parse_date(header.get("date") or "")
    if stamp is not None:
        print(f"\nDate: epoch={stamp.epoch_seconds} "
              f"offset={stamp.utc_offset_minutes}min zone={stamp.zone_token}")

    print("\ndelivery chain, newest hop first:")
    for value in header.get_all("received"):
        hop = parse_received(value)
        print(f"  from={hop.from_host!r:28} by={hop.by_host!r:24} "
              f"ips={list(hop.ip_literals)}")

    sender = extract_domain(header, "from")
    bounce = extract_domain(header, "return-path")
    print(f"\nFrom domain {sender!r} vs Return-Path domain {bounce!r}: "
          f"{'match' if sender == bounce else 'MISMATCH'}")

    # the anomaly-detection contract: one extra round trip changes nothing
    once = serialize_headers(header)
    twice = serialize_headers(parse_headers(once))
    print(f"\nserialize/parse/serialize stable: {twice == once}")


if __name__ == "__main__":
    main()
