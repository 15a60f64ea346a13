package org.example;

import org.apache.log4j.Logger;

public class Channel {
    private static final Logger LOG = Logger.getLogger(Channel.class);

    public void send(String msg) {
        LOG.debug("sending " + msg);
    }
}
